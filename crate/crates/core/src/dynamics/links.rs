//! Tension-only spring-damper threads.

use nalgebra::Vector3;

use crate::scalar::Real;

/// A thread between two particles of the world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link<T> {
    pub a: usize,
    pub b: usize,
    pub rest_length: T,
    /// N/m.
    pub stiffness: T,
    /// N·s/m.
    pub damping: T,
}

impl<T: Real> Link<T> {
    /// Thread of axial stiffness `ea` (N per unit strain) damped at `ratio` of the
    /// critical value for the reduced mass of its two endpoints.
    pub fn thread(
        a: usize,
        b: usize,
        rest_length: T,
        ea: T,
        ratio: T,
        mass_a: T,
        mass_b: T,
    ) -> Self {
        let stiffness = ea / rest_length;
        let reduced = mass_a * mass_b / (mass_a + mass_b);
        let damping = ratio * T::of(2.0) * (stiffness * reduced).sqrt();
        Self {
            a,
            b,
            rest_length,
            stiffness,
            damping,
        }
    }

    /// Force on endpoint `a` (endpoint `b` receives the negation).
    ///
    /// Zero while slack; damping can only reduce tension, never push.
    #[inline]
    pub fn force_on_a(
        &self,
        xa: &Vector3<T>,
        xb: &Vector3<T>,
        va: &Vector3<T>,
        vb: &Vector3<T>,
    ) -> Vector3<T> {
        let d = xb - xa;
        let len = d.norm();
        let stretch = len - self.rest_length;
        if !(stretch > T::zero()) {
            return Vector3::zeros();
        }
        let dir = d / len;
        let rate = (vb - va).dot(&dir);
        let tension = (self.stiffness * stretch + self.damping * rate).max(T::zero());
        dir * tension
    }

    /// Discrete-gradient force on endpoint `a` over a step from `(xa0, xb0)` to
    /// `(xa1, xb1)`, damped on the midpoint velocities `va`, `vb`.
    ///
    /// The elastic part does exactly `energy(x0) - energy(x1)` of work over the
    /// step, so only the damping term changes the total.
    #[inline]
    pub fn midpoint_force_on_a(
        &self,
        xa0: &Vector3<T>,
        xb0: &Vector3<T>,
        xa1: &Vector3<T>,
        xb1: &Vector3<T>,
        va: &Vector3<T>,
        vb: &Vector3<T>,
    ) -> Vector3<T> {
        let (d0, d1) = (xb0 - xa0, xb1 - xa1);
        let (l0, l1) = (d0.norm(), d1.norm());
        if !(l0 > self.rest_length) && !(l1 > self.rest_length) {
            return Vector3::zeros();
        }
        let mid = (d0 + d1) * T::of(0.5);
        let len = mid.norm();
        if !(len > T::zero()) {
            return Vector3::zeros();
        }
        // Elastic energy as a function of squared length; `slope` is its
        // divided difference, falling back to the derivative when the
        // endpoints coincide.
        let (q0, q1) = (d0.norm_squared(), d1.norm_squared());
        let u = |l: T| {
            let s = (l - self.rest_length).max(T::zero());
            T::of(0.5) * self.stiffness * s * s
        };
        let dq = q1 - q0;
        let slope = if dq.abs() > T::default_epsilon().sqrt() * (q0 + q1) {
            (u(l1) - u(l0)) / dq
        } else {
            let l = ((q0 + q1) * T::of(0.5)).sqrt();
            self.stiffness * (l - self.rest_length).max(T::zero()) / (T::of(2.0) * l)
        };
        let dir = mid / len;
        let elastic = T::of(2.0) * slope * len;
        // Damping engages only on threads taut at the start of the step so the
        // force stays continuous in the end state.
        let damping = if l0 > self.rest_length {
            self.damping * (vb - va).dot(&dir)
        } else {
            T::zero()
        };
        dir * (elastic + damping).max(T::zero())
    }

    /// Elastic energy stored in the thread.
    #[inline]
    pub fn energy(&self, xa: &Vector3<T>, xb: &Vector3<T>) -> T {
        let stretch = (xb - xa).norm() - self.rest_length;
        if stretch > T::zero() {
            T::of(0.5) * self.stiffness * stretch * stretch
        } else {
            T::zero()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn link() -> Link<f64> {
        Link::thread(0, 1, 1.375, 5000.0, 0.1, 0.346, 0.346)
    }

    #[test]
    fn rest_length_gives_no_force() {
        let l = link();
        let f = l.force_on_a(
            &Vector3::zeros(),
            &Vector3::new(1.375, 0.0, 0.0),
            &Vector3::zeros(),
            &Vector3::zeros(),
        );
        assert_eq!(f, Vector3::zeros());
    }

    #[test]
    fn compressed_thread_cannot_push() {
        let l = link();
        let xb = Vector3::new(1.375 * 0.99, 0.0, 0.0);
        let f = l.force_on_a(
            &Vector3::zeros(),
            &xb,
            &Vector3::zeros(),
            &Vector3::new(-3.0, 0.0, 0.0),
        );
        assert_eq!(f, Vector3::zeros());
        assert_eq!(l.energy(&Vector3::zeros(), &xb), 0.0);
    }

    #[test]
    fn stretched_thread_pulls_endpoints_together() {
        let l = link();
        let xb = Vector3::new(0.0, 1.375 * 1.02, 0.0);
        let f = l.force_on_a(&Vector3::zeros(), &xb, &Vector3::zeros(), &Vector3::zeros());
        assert_relative_eq!(f.y, 5000.0 * 0.02, epsilon = 1e-9);
        assert_eq!(f.x, 0.0);
    }

    #[test]
    fn closing_stretch_rate_never_turns_into_compression() {
        let l = link();
        let xb = Vector3::new(1.375 * 1.0001, 0.0, 0.0);
        let f = l.force_on_a(
            &Vector3::zeros(),
            &xb,
            &Vector3::zeros(),
            &Vector3::new(-50.0, 0.0, 0.0),
        );
        assert_eq!(f, Vector3::zeros());
    }

    #[test]
    fn midpoint_force_work_matches_energy_change() {
        let mut l = link();
        l.damping = 0.0;
        let xa0 = Vector3::new(0.1, -0.2, 0.0);
        let xb0 = Vector3::new(1.30, 0.3, 0.1);
        let xa1 = Vector3::new(0.12, -0.18, 0.01);
        let xb1 = Vector3::new(1.41, 0.35, 0.05);
        let f = l.midpoint_force_on_a(&xa0, &xb0, &xa1, &xb1, &Vector3::zeros(), &Vector3::zeros());
        let work = f.dot(&(xa1 - xa0)) - f.dot(&(xb1 - xb0));
        assert_relative_eq!(
            work,
            l.energy(&xa0, &xb0) - l.energy(&xa1, &xb1),
            epsilon = 1e-9
        );
    }

    #[test]
    fn midpoint_damping_only_removes_energy() {
        let l = link();
        let (xa0, xb0) = (Vector3::zeros(), Vector3::new(1.375 * 1.01, 0.0, 0.0));
        let (xa1, xb1) = (
            Vector3::new(-0.001, 0.0, 0.0),
            Vector3::new(1.375 * 1.012, 0.0, 0.0),
        );
        let (va, vb) = (Vector3::new(-0.5, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0));
        let f = l.midpoint_force_on_a(&xa0, &xb0, &xa1, &xb1, &va, &vb);
        let work = f.dot(&(xa1 - xa0)) - f.dot(&(xb1 - xb0));
        assert!(work < l.energy(&xa0, &xb0) - l.energy(&xa1, &xb1));
    }
}
