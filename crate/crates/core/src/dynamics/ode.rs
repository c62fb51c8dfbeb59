//! Dormand-Prince 5(4) with step-size control and continuous output.

use std::io::Write;

use thiserror::Error;

use crate::model::{RateError, ReactionNetwork};

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (stiff or blowing-up system)")]
    StepSizeUnderflow { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget of {steps} exhausted at t = {t}")]
    MaxSteps { steps: usize, t: f64 },
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error("right-hand side failed at t = {t}: {message}")]
    Rhs { t: f64, message: String },
}

#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Interior points per step sampled when tracking the minimum coordinate.
    pub min_probe: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, max_steps: 2_000_000, min_probe: 4 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with the coefficients of its quartic interpolant.
#[derive(Clone, Debug)]
struct Segment {
    t0: f64,
    h: f64,
    c: [Vec<f64>; 5],
}

impl Segment {
    fn eval_into(&self, t: f64, out: &mut [f64]) {
        let s = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let s1 = 1.0 - s;
        let [c0, c1, c2, c3, c4] = &self.c;
        for i in 0..out.len() {
            out[i] = c0[i] + s * (c1[i] + s1 * (c2[i] + s * (c3[i] + s1 * c4[i])));
        }
    }
}

/// Solution on `[t0, t_end]` with continuous output between steps.
#[derive(Clone, Debug)]
pub struct OdeSolution {
    segments: Vec<Segment>,
    z0: Vec<f64>,
    t0: f64,
    t_end: f64,
    final_state: Vec<f64>,
    /// Minimum of `min_i z_i(t)` over step endpoints and interior probes.
    pub min_coordinate: f64,
    pub steps: usize,
    pub rejected: usize,
}

impl OdeSolution {
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn final_state(&self) -> &[f64] {
        &self.final_state
    }

    pub fn dim(&self) -> usize {
        self.z0.len()
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.z0.len()];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        if self.segments.is_empty() || t <= self.t0 {
            out.copy_from_slice(&self.z0);
            return;
        }
        if t >= self.t_end {
            out.copy_from_slice(&self.final_state);
            return;
        }
        let k = self.segments.partition_point(|s| s.t0 + s.h < t);
        self.segments[k.min(self.segments.len() - 1)].eval_into(t, out);
    }

    /// `points` equally spaced samples including both endpoints.
    pub fn uniform_grid(&self, points: usize) -> Vec<(f64, Vec<f64>)> {
        let points = points.max(2);
        (0..points)
            .map(|k| {
                let t = self.t0 + (self.t_end - self.t0) * k as f64 / (points - 1) as f64;
                (t, self.eval(t))
            })
            .collect()
    }

    /// CSV with header `t,<names...>` on a uniform grid.
    pub fn write_csv<W: Write>(&self, mut w: W, names: &[String], points: usize) -> std::io::Result<()> {
        writeln!(w, "t,{}", names.join(","))?;
        for (t, z) in self.uniform_grid(points) {
            write!(w, "{t}")?;
            for v in z {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn rms_norm(err: &[f64], y0: &[f64], y1: &[f64], opts: &OdeOptions) -> f64 {
    let n = err.len().max(1) as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

/// Integrates `z' = f(t, z)` from `z0` at `t0` to `t_end`.
pub fn integrate<F>(mut f: F, z0: &[f64], t0: f64, t_end: f64, opts: &OdeOptions) -> Result<OdeSolution, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), OdeError>,
{
    let n = z0.len();
    let mut sol = OdeSolution {
        segments: Vec::new(),
        z0: z0.to_vec(),
        t0,
        t_end,
        final_state: z0.to_vec(),
        min_coordinate: z0.iter().copied().fold(f64::INFINITY, f64::min),
        steps: 0,
        rejected: 0,
    };
    if t_end <= t0 || n == 0 {
        return Ok(sol);
    }
    let mut y = z0.to_vec();
    let mut k1 = vec![0.0; n];
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut probe = vec![0.0; n];
    f(t0, &y, &mut k1)?;

    // Initial step from the local scales of y and y'.
    let d0 = rms_norm(&y, &vec![0.0; n], &y, opts);
    let d1 = rms_norm(&k1, &vec![0.0; n], &y, opts);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(t_end - t0);
    let mut t = t0;
    let mut last_accepted = true;

    while t < t_end {
        if sol.steps + sol.rejected >= opts.max_steps {
            return Err(OdeError::MaxSteps { steps: opts.max_steps, t });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(OdeError::StepSizeUnderflow { t });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let stage = |tmp: &mut Vec<f64>, coeffs: &[(&Vec<f64>, f64)]| {
            for i in 0..n {
                let mut acc = y[i];
                for (k, a) in coeffs {
                    acc += h * a * k[i];
                }
                tmp[i] = acc;
            }
        };
        // A right-hand side that refuses a stage point (for instance outside
        // its domain) rejects the step like a non-finite error estimate.
        let attempt: Result<(), OdeError> = 'stages: {
            macro_rules! eval {
                ($t:expr, $y:expr, $k:expr) => {
                    if let Err(e) = f($t, $y, $k) {
                        break 'stages Err(e);
                    }
                };
            }
            stage(&mut tmp, &[(&k1, A21)]);
            eval!(t + C2 * h, &tmp, &mut k2);
            stage(&mut tmp, &[(&k1, A31), (&k2, A32)]);
            eval!(t + C3 * h, &tmp, &mut k3);
            stage(&mut tmp, &[(&k1, A41), (&k2, A42), (&k3, A43)]);
            eval!(t + C4 * h, &tmp, &mut k4);
            stage(&mut tmp, &[(&k1, A51), (&k2, A52), (&k3, A53), (&k4, A54)]);
            eval!(t + C5 * h, &tmp, &mut k5);
            stage(&mut tmp, &[(&k1, A61), (&k2, A62), (&k3, A63), (&k4, A64), (&k5, A65)]);
            eval!(t + h, &tmp, &mut k6);
            stage(&mut y1, &[(&k1, A71), (&k3, A73), (&k4, A74), (&k5, A75), (&k6, A76)]);
            eval!(t + h, &y1, &mut k7);
            Ok(())
        };
        match attempt {
            Ok(()) => {}
            Err(e @ OdeError::Rhs { .. }) => {
                if h < 1e-12 * t.abs().max(1.0) {
                    return Err(e);
                }
                h *= 0.1;
                sol.rejected += 1;
                last_accepted = false;
                continue;
            }
            Err(e) => return Err(e),
        }
        for i in 0..n {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = rms_norm(&err, &y, &y1, opts);
        if !e.is_finite() {
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(OdeError::NonFinite { t });
            }
            h *= 0.1;
            sol.rejected += 1;
            last_accepted = false;
            continue;
        }
        if e <= 1.0 {
            let mut c = [y.clone(), vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
            for i in 0..n {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                c[1][i] = ydiff;
                c[2][i] = bspl;
                c[3][i] = ydiff - h * k7[i] - bspl;
                c[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let seg = Segment { t0: t, h, c };
            for j in 1..=opts.min_probe {
                seg.eval_into(t + h * j as f64 / (opts.min_probe + 1) as f64, &mut probe);
                sol.min_coordinate = probe.iter().copied().fold(sol.min_coordinate, f64::min);
            }
            sol.min_coordinate = y1.iter().copied().fold(sol.min_coordinate, f64::min);
            sol.segments.push(seg);
            sol.steps += 1;
            t = if last { t_end } else { t + h };
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7);
            let mut fac = 0.9 * e.max(1e-10).powf(-0.2);
            if !last_accepted {
                fac = fac.min(1.0);
            }
            h *= fac.clamp(0.2, 10.0);
            last_accepted = true;
        } else {
            h *= (0.9 * e.powf(-0.2)).clamp(0.2, 1.0);
            sol.rejected += 1;
            last_accepted = false;
        }
    }
    sol.final_state = y;
    Ok(sol)
}

/// Integrates the deterministic mass-action (or expression-law) ODE of a
/// network.
pub fn integrate_network(
    net: &ReactionNetwork,
    z0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
) -> Result<OdeSolution, OdeError> {
    integrate(
        |_, z, out| {
            net.deterministic_rhs(z, out)?;
            Ok(())
        },
        z0,
        0.0,
        t_end,
        opts,
    )
}
