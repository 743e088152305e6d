//! Integral-equation baselines on the 32x32 contrast grid: back-propagation
//! (BP), the Born approximation method (BAM) and the Born iterative method
//! (BIM), together with the method-of-moments forward solver BIM needs.
//!
//! Discretization is pulse-basis / point-matching over the profile extent,
//! with the 2D Helmholtz Green's function g(r,r') = (i/4) H0^(1)(k0 |r-r'|).
//! Formulations follow standard computational imaging practice (see e.g.
//! Chen, "Computational Methods for Electromagnetic Inverse Scattering").

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::special::{hankel1_0, hankel1_1};
use crate::wall::{
    DielectricProfile, PROFILE_SIZE, PROFILE_X_MAX, PROFILE_X_MIN, PROFILE_Y_MAX, PROFILE_Y_MIN,
};
use crate::C0;

/// Number of unknowns on the contrast grid.
pub const CELLS: usize = PROFILE_SIZE * PROFILE_SIZE;

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("solver error: {0}")]
    Solver(String),
}

/// Complex contrast chi(r) = eps_r(r) - 1 on the 32x32 grid, row-major with
/// the same pixel ordering as [`DielectricProfile`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastGrid {
    pub chi: Vec<Complex64>,
}

impl ContrastGrid {
    pub fn zeros() -> Self {
        ContrastGrid {
            chi: vec![Complex64::new(0.0, 0.0); CELLS],
        }
    }

    pub fn from_vec(chi: Vec<Complex64>) -> Result<Self, ClassicalError> {
        if chi.len() != CELLS {
            return Err(ClassicalError::InvalidArgument(format!(
                "contrast grid needs {CELLS} cells, got {}",
                chi.len()
            )));
        }
        Ok(ContrastGrid { chi })
    }

    /// eps_r = 1 + clamped real part, for export through the profile path.
    pub fn to_profile(&self) -> DielectricProfile {
        let vals: Vec<f64> = self.chi.iter().map(|c| 1.0 + c.re.max(0.0)).collect();
        DielectricProfile::from_values(vals).expect("values >= 1 by clamping")
    }
}

/// Scattered-field phasors at the receivers under the e^{-i omega t}
/// convention the Green's function uses.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    pub s: Vec<Complex64>,
}

impl MeasurementVector {
    /// Builds the measurement from a frequency input vector
    /// ([re x N, im x N] layout). The pipeline fits phasors under the
    /// e^{+i omega t} convention, so each entry is conjugated here.
    pub fn from_freq_layout(freq: &[f64]) -> Result<Self, ClassicalError> {
        if freq.len() % 2 != 0 || freq.is_empty() {
            return Err(ClassicalError::InvalidArgument(format!(
                "frequency vector length {} is not 2*N",
                freq.len()
            )));
        }
        let n = freq.len() / 2;
        Ok(MeasurementVector {
            s: (0..n)
                .map(|i| Complex64::new(freq[i], -freq[n + i]))
                .collect(),
        })
    }

    pub fn norm(&self) -> f64 {
        self.s.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Discretized scattering operators shared by all classical methods.
#[derive(Debug, Clone)]
pub struct ScatterOperators {
    /// Receiver kernel, N x M: maps contrast currents to receiver fields.
    pub g_rx: DMatrix<Complex64>,
    /// Domain kernel, M x M.
    pub g_dom: DMatrix<Complex64>,
    /// Incident field at cell centers (scaled by the calibration factor).
    pub e_inc: DVector<Complex64>,
    /// Free-space wavenumber (rad/m).
    pub k0: f64,
    source: (f64, f64),
    receivers: Vec<(f64, f64)>,
}

fn cell_center(idx: usize) -> (f64, f64) {
    DielectricProfile::pixel_center(idx / PROFILE_SIZE, idx % PROFILE_SIZE)
}

fn greens(k0: f64, a: (f64, f64), b: (f64, f64)) -> Complex64 {
    let r = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    Complex64::new(0.0, 0.25) * hankel1_0(k0 * r)
}

/// Pulse-basis, point-matching operators on the 32x32 profile grid.
pub fn build_operators(
    receivers: &[(f64, f64)],
    source: (f64, f64),
    f0: f64,
) -> Result<ScatterOperators, ClassicalError> {
    if receivers.is_empty() {
        return Err(ClassicalError::InvalidArgument("no receivers".into()));
    }
    if f0 <= 0.0 {
        return Err(ClassicalError::InvalidArgument("f0 must be > 0".into()));
    }
    let inside = |p: (f64, f64)| {
        p.0 > PROFILE_X_MIN && p.0 < PROFILE_X_MAX && p.1 > PROFILE_Y_MIN && p.1 < PROFILE_Y_MAX
    };
    for (i, &rx) in receivers.iter().enumerate() {
        if inside(rx) {
            return Err(ClassicalError::Geometry(format!(
                "receiver {i} at ({}, {}) lies inside the profile extent",
                rx.0, rx.1
            )));
        }
    }
    if inside(source) {
        return Err(ClassicalError::Geometry(
            "source lies inside the profile extent".into(),
        ));
    }
    let k0 = 2.0 * std::f64::consts::PI * f0 / C0;
    let px = (PROFILE_X_MAX - PROFILE_X_MIN) / PROFILE_SIZE as f64;
    let py = (PROFILE_Y_MAX - PROFILE_Y_MIN) / PROFILE_SIZE as f64;
    let area = px * py;
    let k2a = Complex64::new(k0 * k0 * area, 0.0);
    // Equivalent-circle self-cell integral: k0^2 * Int_cell g
    // = (i/2) [pi k0 a H1(k0 a) - 2i], a = area-equivalent radius.
    let a_eq = (area / std::f64::consts::PI).sqrt();
    let self_cell =
        Complex64::new(0.0, 0.5) * (std::f64::consts::PI * k0 * a_eq * hankel1_1(k0 * a_eq)
            - Complex64::new(0.0, 2.0));

    let mut g_rx = DMatrix::zeros(receivers.len(), CELLS);
    for (j, &rx) in receivers.iter().enumerate() {
        for n in 0..CELLS {
            g_rx[(j, n)] = k2a * greens(k0, rx, cell_center(n));
        }
    }
    let mut g_dom = DMatrix::zeros(CELLS, CELLS);
    for m in 0..CELLS {
        let rm = cell_center(m);
        for n in 0..CELLS {
            g_dom[(m, n)] = if m == n {
                self_cell
            } else {
                k2a * greens(k0, rm, cell_center(n))
            };
        }
    }
    let e_inc = DVector::from_iterator(
        CELLS,
        (0..CELLS).map(|n| greens(k0, source, cell_center(n))),
    );
    Ok(ScatterOperators {
        g_rx,
        g_dom,
        e_inc,
        k0,
        source,
        receivers: receivers.to_vec(),
    })
}

impl ScatterOperators {
    /// Analytic free-space field at each receiver for a unit line source
    /// (before calibration scaling).
    pub fn freespace_at_receivers(&self) -> Vec<Complex64> {
        self.receivers
            .iter()
            .map(|&rx| greens(self.k0, self.source, rx))
            .collect()
    }

    /// Fits a single complex amplitude A to measured free-space receiver
    /// phasors (e^{-i omega t} convention) and scales the incident field by
    /// it, so simulated measurements and the operators share units.
    pub fn calibrate_incident(
        &mut self,
        freespace_phasors: &[Complex64],
    ) -> Result<Complex64, ClassicalError> {
        if freespace_phasors.len() != self.receivers.len() {
            return Err(ClassicalError::InvalidArgument(format!(
                "expected {} free-space phasors, got {}",
                self.receivers.len(),
                freespace_phasors.len()
            )));
        }
        let g = self.freespace_at_receivers();
        let num: Complex64 = g
            .iter()
            .zip(freespace_phasors)
            .map(|(gi, pi)| gi.conj() * pi)
            .sum();
        let den: f64 = g.iter().map(|gi| gi.norm_sqr()).sum();
        if den == 0.0 {
            return Err(ClassicalError::Solver(
                "degenerate free-space geometry".into(),
            ));
        }
        let a = num / den;
        if a.norm() == 0.0 {
            return Err(ClassicalError::InvalidArgument(
                "all-zero free-space phasors".into(),
            ));
        }
        self.e_inc.iter_mut().for_each(|v| *v *= a);
        Ok(a)
    }

    /// First-Born data operator A = G_rx diag(e_inc).
    fn born_matrix(&self, field: &DVector<Complex64>) -> DMatrix<Complex64> {
        let mut a = self.g_rx.clone();
        for n in 0..CELLS {
            let f = field[n];
            for j in 0..a.nrows() {
                a[(j, n)] *= f;
            }
        }
        a
    }

    fn residual(&self, chi: &ContrastGrid, s: &MeasurementVector) -> Result<f64, ClassicalError> {
        let pred = mom_forward(self, chi)?;
        Ok(pred
            .s
            .iter()
            .zip(&s.s)
            .map(|(p, m)| (p - m).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }
}

/// Largest singular value squared of A, via power iteration on A^H A
/// applied through the small A A^H Gram matrix.
fn spectral_norm_sq(a: &DMatrix<Complex64>) -> f64 {
    let gram = a * a.adjoint(); // N x N, hermitian PSD
    let n = gram.nrows();
    let mut v = DVector::from_element(n, Complex64::new(1.0, 0.0));
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = &gram * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / Complex64::new(norm, 0.0);
        lambda = norm;
    }
    lambda
}

/// Minimum-norm Tikhonov solution chi = A^H (A A^H + lambda I)^{-1} s,
/// equivalent to (A^H A + lambda I)^{-1} A^H s but solved at the small
/// measurement dimension.
fn tikhonov_solve(
    a: &DMatrix<Complex64>,
    s: &[Complex64],
    lambda: f64,
) -> Result<Vec<Complex64>, ClassicalError> {
    let n = a.nrows();
    let mut gram = a * a.adjoint();
    for i in 0..n {
        gram[(i, i)] += Complex64::new(lambda, 0.0);
    }
    let rhs = DVector::from_column_slice(s);
    let lu = gram.lu();
    let y = lu
        .solve(&rhs)
        .ok_or_else(|| ClassicalError::Solver("regularized Gram system is singular".into()))?;
    let chi = a.adjoint() * y;
    Ok(chi.iter().copied().collect())
}

/// Solves the state equation e = e_inc + G_dom diag(chi) e for the total
/// field, then evaluates the data equation s = G_rx diag(chi) e.
pub fn mom_forward(
    ops: &ScatterOperators,
    chi: &ContrastGrid,
) -> Result<MeasurementVector, ClassicalError> {
    let e = total_field(ops, chi)?;
    let mut s = vec![Complex64::new(0.0, 0.0); ops.g_rx.nrows()];
    for (j, sj) in s.iter_mut().enumerate() {
        for n in 0..CELLS {
            *sj += ops.g_rx[(j, n)] * chi.chi[n] * e[n];
        }
    }
    Ok(MeasurementVector { s })
}

fn total_field(
    ops: &ScatterOperators,
    chi: &ContrastGrid,
) -> Result<DVector<Complex64>, ClassicalError> {
    if chi.chi.iter().all(|c| c.norm_sqr() == 0.0) {
        return Ok(ops.e_inc.clone());
    }
    // (I - G_dom diag(chi)) e = e_inc
    let mut m = DMatrix::zeros(CELLS, CELLS);
    for r in 0..CELLS {
        for c in 0..CELLS {
            m[(r, c)] = if r == c {
                Complex64::new(1.0, 0.0) - ops.g_dom[(r, c)] * chi.chi[c]
            } else {
                -ops.g_dom[(r, c)] * chi.chi[c]
            };
        }
    }
    let lu = m.lu();
    lu.solve(&ops.e_inc).ok_or_else(|| {
        ClassicalError::Solver("state equation singular (contrast too extreme)".into())
    })
}

/// Back-propagation image: chi proportional to conj(e_inc) .* (G_rx^H s),
/// normalized by |e_inc|^2, with the overall complex scale gamma fitted to
/// the data in the first-Born sense.
pub fn bp_invert(
    ops: &ScatterOperators,
    s: &MeasurementVector,
) -> Result<ContrastGrid, ClassicalError> {
    check_measurement(ops, s)?;
    let sv = DVector::from_column_slice(&s.s);
    let adj = ops.g_rx.adjoint() * &sv;
    let floor = ops.e_inc.iter().map(|v| v.norm_sqr()).sum::<f64>() / CELLS as f64 * 1e-12;
    let base: Vec<Complex64> = (0..CELLS)
        .map(|n| ops.e_inc[n].conj() * adj[n] / (ops.e_inc[n].norm_sqr() + floor))
        .collect();
    // gamma minimizing || s - A (gamma * base) ||_2 with A = G_rx diag(e_inc).
    let a = ops.born_matrix(&ops.e_inc);
    let ab = &a * DVector::from_column_slice(&base);
    let den: f64 = ab.iter().map(|v| v.norm_sqr()).sum();
    let gamma = if den == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        ab.iter().zip(&s.s).map(|(p, m)| p.conj() * m).sum::<Complex64>() / den
    };
    ContrastGrid::from_vec(base.into_iter().map(|b| gamma * b).collect())
}

/// Born approximation: Tikhonov-regularized first-Born linear inversion.
/// `lambda` defaults (when `None`) to 0.01 * ||A||_2^2.
pub fn bam_invert(
    ops: &ScatterOperators,
    s: &MeasurementVector,
    lambda: Option<f64>,
) -> Result<ContrastGrid, ClassicalError> {
    check_measurement(ops, s)?;
    let a = ops.born_matrix(&ops.e_inc);
    let lambda = match lambda {
        Some(l) if l <= 0.0 => {
            return Err(ClassicalError::InvalidArgument(
                "tikhonov lambda must be > 0".into(),
            ))
        }
        Some(l) => l,
        None => 0.01 * spectral_norm_sq(&a),
    };
    ContrastGrid::from_vec(tikhonov_solve(&a, &s.s, lambda)?)
}

/// Born iterative method result.
#[derive(Debug, Clone)]
pub struct BimResult {
    pub chi: ContrastGrid,
    /// Iterations actually performed.
    pub iterations: usize,
    /// True when the relative contrast change dropped below tolerance.
    pub converged: bool,
    /// Set when the method had to fall back to the best-residual iterate
    /// instead of the last one (non-convergent oscillation).
    pub oscillation_warning: bool,
    /// Data residual per iterate.
    pub residuals: Vec<f64>,
}

/// Born iterative method: alternate full forward solves with regularized
/// linear contrast updates. The returned iterate is the one with the
/// smallest data residual (the first iterate reproduces BAM).
pub fn bim_invert(
    ops: &ScatterOperators,
    s: &MeasurementVector,
    max_iters: usize,
    tol: f64,
) -> Result<BimResult, ClassicalError> {
    check_measurement(ops, s)?;
    if max_iters == 0 {
        return Err(ClassicalError::InvalidArgument("max_iters must be >= 1".into()));
    }
    if tol <= 0.0 {
        return Err(ClassicalError::InvalidArgument("tol must be > 0".into()));
    }
    let mut chi = ContrastGrid::zeros();
    let mut best = chi.clone();
    let mut best_res = f64::INFINITY;
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let s_norm = s.norm();
    for _ in 0..max_iters {
        iterations += 1;
        // (i) total field under the current contrast.
        let e = total_field(ops, &chi)?;
        // (ii) regularized linear update with A = G_rx diag(e).
        let a = ops.born_matrix(&e);
        let lambda = 0.01 * spectral_norm_sq(&a);
        let next = ContrastGrid::from_vec(tikhonov_solve(&a, &s.s, lambda.max(1e-300))?)?;
        let res = ops.residual(&next, s)?;
        residuals.push(res);
        if res < best_res {
            best_res = res;
            best = next.clone();
        }
        let change: f64 = next
            .chi
            .iter()
            .zip(&chi.chi)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale: f64 = next.chi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        chi = next;
        if s_norm == 0.0 || (scale > 0.0 && change / scale < tol) || scale == 0.0 {
            converged = true;
            break;
        }
    }
    let last_is_best = residuals
        .last()
        .map(|&r| r <= best_res * (1.0 + 1e-12))
        .unwrap_or(true);
    Ok(BimResult {
        chi: best,
        iterations,
        converged,
        oscillation_warning: !converged && !last_is_best,
        residuals,
    })
}

fn check_measurement(
    ops: &ScatterOperators,
    s: &MeasurementVector,
) -> Result<(), ClassicalError> {
    if s.s.len() != ops.g_rx.nrows() {
        return Err(ClassicalError::InvalidArgument(format!(
            "measurement length {} does not match {} receivers",
            s.s.len(),
            ops.g_rx.nrows()
        )));
    }
    Ok(())
}
