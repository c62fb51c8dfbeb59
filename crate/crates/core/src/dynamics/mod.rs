//! Exact simulation of the scaled chains and integration of the limiting
//! ODEs.

pub mod ode;
pub mod rng;
pub mod ssa;

use ode::OdeSolution;
use ssa::{Observer, Trajectory};

/// Grid points checked in addition to jump times.
pub const SUP_GRID_POINTS: usize = 10_000;

/// Streaming `sup_t |N^{-1} pi_c(X(t)) - z(t)|_inf`.
///
/// The path is piecewise constant, so each holding interval is compared
/// against `z` at its left end, its right end (the left limit before the
/// jump) and at every grid point it contains.
pub struct SupDistance<'a> {
    ode: &'a OdeSolution,
    continuous: Vec<usize>,
    inv_n: f64,
    grid_dt: f64,
    next_grid: usize,
    grid_points: usize,
    t_prev: f64,
    held: Vec<f64>,
    z: Vec<f64>,
    pub sup: f64,
}

impl<'a> SupDistance<'a> {
    /// `alpha[i] == 1` marks the continuous species, in the order of the
    /// ODE's coordinates.
    pub fn new(ode: &'a OdeSolution, alpha: &[u8], n: f64) -> Self {
        let continuous: Vec<usize> = alpha.iter().enumerate().filter(|(_, &a)| a == 1).map(|(i, _)| i).collect();
        assert_eq!(continuous.len(), ode.dim(), "ODE dimension must match the continuous species");
        let grid_points = SUP_GRID_POINTS;
        Self {
            ode,
            grid_dt: ode.t_end() / (grid_points - 1) as f64,
            continuous,
            inv_n: 1.0 / n,
            next_grid: 0,
            grid_points,
            t_prev: 0.0,
            held: Vec::new(),
            z: vec![0.0; ode.dim()],
            sup: 0.0,
        }
    }

    fn compare(&mut self, t: f64) {
        self.ode.eval_into(t, &mut self.z);
        for (h, z) in self.held.iter().zip(&self.z) {
            let d = (h - z).abs();
            if d > self.sup {
                self.sup = d;
            }
        }
    }

    /// Compares the held state on `[t_prev, t]`.
    fn close_interval(&mut self, t: f64) {
        self.compare(self.t_prev);
        while self.next_grid < self.grid_points && (self.next_grid as f64) * self.grid_dt < t {
            let g = self.next_grid as f64 * self.grid_dt;
            if g > self.t_prev {
                self.compare(g);
            }
            self.next_grid += 1;
        }
        self.compare(t);
    }

    fn hold(&mut self, t: f64, x: &[u64]) {
        self.t_prev = t;
        self.held = self.continuous.iter().map(|&i| x[i] as f64 * self.inv_n).collect();
    }
}

impl Observer for SupDistance<'_> {
    fn start(&mut self, t: f64, x: &[u64]) {
        self.hold(t, x);
    }
    fn jump(&mut self, t: f64, x: &[u64], _r: usize) {
        self.close_interval(t);
        self.hold(t, x);
    }
    fn finish(&mut self, t_end: f64, _x: &[u64]) {
        self.close_interval(t_end);
    }
}

/// `sup_t |N^{-1} pi_c(X(t)) - z(t)|_inf` over jump times and a uniform grid.
pub fn path_sup_distance(traj: &Trajectory, ode: &OdeSolution, alpha: &[u8], n: f64) -> f64 {
    let mut obs = SupDistance::new(ode, alpha, n);
    traj.replay(&mut obs);
    obs.sup
}

#[cfg(test)]
mod tests {
    use super::ode::{integrate, OdeOptions};
    use super::*;

    fn constant_ode(z0: &[f64], t_end: f64) -> OdeSolution {
        integrate(
            |_, _, out| {
                out.iter_mut().for_each(|v| *v = 0.0);
                Ok(())
            },
            z0,
            0.0,
            t_end,
            &OdeOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn identical_paths_have_zero_distance() {
        let ode = constant_ode(&[1.5], 2.0);
        let tr = Trajectory::constant(&[7, 150], 2.0);
        assert_eq!(path_sup_distance(&tr, &ode, &[0, 1], 100.0), 0.0);
    }

    #[test]
    fn single_jump_shows_up_as_xi_over_n() {
        let ode = constant_ode(&[1.0], 1.0);
        let mut tr = Trajectory::constant(&[0, 100], 1.0);
        tr.push(0.3, &[1, 99], Some(0));
        assert!((path_sup_distance(&tr, &ode, &[0, 1], 100.0) - 0.01).abs() < 1e-15);
    }
}
