//! 2D transverse-magnetic (Ez, Hx, Hy) FDTD solver with convolutional PML
//! absorbing boundaries, soft line-source excitation and receiver sampling.
//!
//! The Yee grid is square (`dy == dx`). Material values (relative
//! permittivity and conductivity) live at Ez nodes and are point-sampled at
//! node coordinates. All arithmetic is IEEE-754 f64 and runs are bit-exact
//! reproducible for identical inputs.

use thiserror::Error;

use crate::{carrier_wavelength, C0, EPS0, F0, MU0};

/// CPML polynomial grading order.
const PML_ORDER: f64 = 3.0;
/// CPML alpha at the inner PML boundary (S/m), graded linearly to zero.
const PML_ALPHA_MAX: f64 = 0.05;

#[derive(Debug, Error)]
pub enum FdtdError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Courant stability violated: dt={dt:e}s exceeds limit {limit:e}s for dx={dx}m")]
    Stability { dt: f64, dx: f64, limit: f64 },
    #[error("field diverged (non-finite Ez) at step {step}")]
    Divergence { step: usize },
    #[error("geometry error: {0}")]
    Geometry(String),
}

/// Uniform square-cell grid description, PML layer included in `nx`/`ny`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Cell size along both axes (m).
    pub dx: f64,
    /// Time step (s).
    pub dt: f64,
    /// Ez node counts, PML included.
    pub nx: usize,
    pub ny: usize,
    /// Physical coordinate of Ez node (0, 0) (m).
    pub x0: f64,
    pub y0: f64,
    /// PML thickness in cells on each edge.
    pub pml_cells: usize,
}

impl GridSpec {
    /// Grid used throughout the dataset: one-tenth-wavelength cells over
    /// x in [-1.25, 1.25] m, y in [-0.25, 2.25] m, a 2-wavelength CPML, and
    /// a 0.02 ns time step.
    pub fn standard() -> Self {
        Self::with_resolution(carrier_wavelength() / 10.0, 0.02e-9)
    }

    /// Same physical extent as [`GridSpec::standard`] at a caller-chosen
    /// resolution (used by the grid-convergence check).
    pub fn with_resolution(dx: f64, dt: f64) -> Self {
        let span = 2.5_f64;
        let (cx, cy) = (0.0_f64, 1.0_f64);
        let n_interior = (span / dx).ceil() as usize + 1;
        let pml_cells = (2.0 * carrier_wavelength() / dx).ceil() as usize;
        let nx = n_interior + 2 * pml_cells;
        let half = (n_interior - 1) as f64 * dx / 2.0;
        GridSpec {
            dx,
            dt,
            nx,
            ny: nx,
            x0: cx - half - pml_cells as f64 * dx,
            y0: cy - half - pml_cells as f64 * dx,
            pml_cells,
        }
    }

    /// Courant limit for this cell size: `dx / (c * sqrt(2))`.
    pub fn courant_limit(&self) -> f64 {
        self.dx / (C0 * 2.0_f64.sqrt())
    }

    /// Physical x coordinate of Ez node column `i`.
    pub fn x_at(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    /// Physical y coordinate of Ez node row `j`.
    pub fn y_at(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.dx
    }

    /// Bounds of the non-PML region as (xmin, xmax, ymin, ymax).
    pub fn interior_bounds(&self) -> (f64, f64, f64, f64) {
        let p = self.pml_cells as f64 * self.dx;
        (
            self.x0 + p,
            self.x0 + (self.nx - 1) as f64 * self.dx - p,
            self.y0 + p,
            self.y0 + (self.ny - 1) as f64 * self.dx - p,
        )
    }

    /// True when (x, y) lies strictly inside the non-PML region.
    pub fn contains_interior(&self, x: f64, y: f64) -> bool {
        let (xmin, xmax, ymin, ymax) = self.interior_bounds();
        x > xmin && x < xmax && y > ymin && y < ymax
    }

    /// Number of time steps covering a 21.5 ns run at this `dt`.
    pub fn default_steps(&self) -> usize {
        (21.5e-9 / self.dt).round() as usize
    }
}

/// Per-node relative permittivity and conductivity over the FDTD grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumGrid {
    pub nx: usize,
    pub ny: usize,
    eps_r: Vec<f64>,
    sigma: Vec<f64>,
}

impl MediumGrid {
    pub fn free_space(nx: usize, ny: usize) -> Self {
        MediumGrid {
            nx,
            ny,
            eps_r: vec![1.0; nx * ny],
            sigma: vec![0.0; nx * ny],
        }
    }

    /// Builds a medium from per-node arrays, enforcing `eps_r >= 1` and
    /// `sigma >= 0` everywhere.
    pub fn new(nx: usize, ny: usize, eps_r: Vec<f64>, sigma: Vec<f64>) -> Result<Self, FdtdError> {
        if eps_r.len() != nx * ny || sigma.len() != nx * ny {
            return Err(FdtdError::InvalidArgument(format!(
                "medium arrays must have {} entries",
                nx * ny
            )));
        }
        if eps_r.iter().any(|&e| !(e >= 1.0) || !e.is_finite()) {
            return Err(FdtdError::InvalidArgument(
                "relative permittivity must be >= 1 everywhere".into(),
            ));
        }
        if sigma.iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
            return Err(FdtdError::InvalidArgument(
                "conductivity must be >= 0 everywhere".into(),
            ));
        }
        Ok(MediumGrid {
            nx,
            ny,
            eps_r,
            sigma,
        })
    }

    pub fn eps_r(&self, i: usize, j: usize) -> f64 {
        self.eps_r[j * self.nx + i]
    }

    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        self.sigma[j * self.nx + i]
    }

    pub fn eps_r_values(&self) -> &[f64] {
        &self.eps_r
    }

    pub fn is_free_space(&self) -> bool {
        self.eps_r.iter().all(|&e| e == 1.0) && self.sigma.iter().all(|&s| s == 0.0)
    }
}

/// Continuous-wave line source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    /// (x, y) position in meters.
    pub position: (f64, f64),
    /// Excitation frequency (Hz).
    pub frequency: f64,
    /// Peak soft-source amplitude (V/m).
    pub amplitude: f64,
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec {
            position: (0.0, 0.5),
            frequency: F0,
            amplitude: 1.0,
        }
    }
}

/// Ordered receiver positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverArray {
    pub positions: Vec<(f64, f64)>,
}

impl ReceiverArray {
    /// `n` receivers uniformly spaced over x in [-0.28, 0.28] m at
    /// `wall_front_y - standoff` (defaults: 10 receivers at y = 0.8 m).
    pub fn line(n: usize, wall_front_y: f64, standoff: f64) -> Self {
        let y = wall_front_y - standoff;
        let positions = (0..n)
            .map(|k| {
                let x = if n == 1 {
                    0.0
                } else {
                    -0.28 + 0.56 * k as f64 / (n - 1) as f64
                };
                (x, y)
            })
            .collect();
        ReceiverArray { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

impl Default for ReceiverArray {
    fn default() -> Self {
        ReceiverArray::line(10, 1.0, 0.2)
    }
}

/// Per-receiver Ez time series plus the spec that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRecord {
    pub dt: f64,
    /// `samples[r][n]` = Ez at receiver `r`, time step `n` (V/m).
    pub samples: Vec<Vec<f64>>,
    pub source: SourceSpec,
    pub receiver_positions: Vec<(f64, f64)>,
}

impl FieldRecord {
    pub fn receiver_count(&self) -> usize {
        self.samples.len()
    }

    pub fn steps(&self) -> usize {
        self.samples.first().map_or(0, |s| s.len())
    }
}

/// Pure Courant-condition predicate: `dt < dx / (c * sqrt(2))`.
pub fn check_courant(grid: &GridSpec) -> Result<bool, FdtdError> {
    if !(grid.dx > 0.0) || !(grid.dt > 0.0) {
        return Err(FdtdError::InvalidArgument(
            "dx and dt must be positive".into(),
        ));
    }
    Ok(grid.dt < grid.courant_limit())
}

struct PmlProfile {
    /// Stretched-coordinate recursion factors at integer (Ez) positions.
    b_e: Vec<f64>,
    c_e: Vec<f64>,
    /// Same at half-integer (H) positions.
    b_h: Vec<f64>,
    c_h: Vec<f64>,
}

/// 1D CPML profile along an axis of `n` Ez nodes with `npml` PML cells on
/// each end. Polynomial sigma grading of order 3, kappa = 1.
fn pml_profile(n: usize, npml: usize, dx: f64, dt: f64) -> PmlProfile {
    let eta0 = (MU0 / EPS0).sqrt();
    let sigma_max = 0.8 * (PML_ORDER + 1.0) / (eta0 * dx);
    let coeff = |depth: f64| -> (f64, f64) {
        if depth <= 0.0 {
            return (0.0, 0.0);
        }
        let d = depth.min(1.0);
        let sigma = sigma_max * d.powf(PML_ORDER);
        let alpha = PML_ALPHA_MAX * (1.0 - d);
        let b = (-(sigma + alpha) * dt / EPS0).exp();
        let c = if sigma + alpha > 0.0 {
            sigma * (b - 1.0) / (sigma + alpha)
        } else {
            0.0
        };
        (b, c)
    };
    let l = npml as f64;
    let mut b_e = vec![0.0; n];
    let mut c_e = vec![0.0; n];
    let mut b_h = vec![0.0; n];
    let mut c_h = vec![0.0; n];
    for i in 0..n {
        // Depth into the PML, normalized to [0, 1], measured from the
        // interior edge outward.
        let de = {
            let lo = npml as f64 - i as f64;
            let hi = i as f64 - (n - 1 - npml) as f64;
            (lo.max(hi) / l).max(0.0)
        };
        let (b, c) = coeff(de);
        b_e[i] = b;
        c_e[i] = c;
        let ih = i as f64 + 0.5;
        let dh = {
            let lo = npml as f64 - ih;
            let hi = ih - (n - 1 - npml) as f64;
            (lo.max(hi) / l).max(0.0)
        };
        let (b, c) = coeff(dh);
        b_h[i] = b;
        c_h[i] = c;
    }
    PmlProfile { b_e, c_e, b_h, c_h }
}

/// Bilinear interpolation weights for a physical point: grid indices of the
/// lower-left node plus fractional offsets.
fn bilinear(grid: &GridSpec, x: f64, y: f64) -> (usize, usize, f64, f64) {
    let fx = (x - grid.x0) / grid.dx;
    let fy = (y - grid.y0) / grid.dx;
    let i = (fx.floor() as usize).min(grid.nx - 2);
    let j = (fy.floor() as usize).min(grid.ny - 2);
    (i, j, fx - i as f64, fy - j as f64)
}

/// Runs the solver and returns the Ez time series at each receiver.
pub fn run_fdtd(
    grid: &GridSpec,
    medium: &MediumGrid,
    source: &SourceSpec,
    receivers: &ReceiverArray,
    steps: usize,
) -> Result<FieldRecord, FdtdError> {
    if !check_courant(grid)? {
        return Err(FdtdError::Stability {
            dt: grid.dt,
            dx: grid.dx,
            limit: grid.courant_limit(),
        });
    }
    if medium.nx != grid.nx || medium.ny != grid.ny {
        return Err(FdtdError::InvalidArgument(format!(
            "medium is {}x{} but grid is {}x{}",
            medium.nx, medium.ny, grid.nx, grid.ny
        )));
    }
    if !grid.contains_interior(source.position.0, source.position.1) {
        return Err(FdtdError::Geometry(
            "source position lies inside the PML".into(),
        ));
    }
    for &(x, y) in &receivers.positions {
        if !grid.contains_interior(x, y) {
            return Err(FdtdError::Geometry(format!(
                "receiver ({x}, {y}) lies inside the PML"
            )));
        }
    }

    let (nx, ny) = (grid.nx, grid.ny);
    let (dx, dt) = (grid.dx, grid.dt);
    let idx = |i: usize, j: usize| j * nx + i;

    // Ez update coefficients with semi-implicit conductivity averaging.
    let mut ca = vec![0.0f64; nx * ny];
    let mut cb = vec![0.0f64; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let eps = medium.eps_r(i, j) * EPS0;
            let sig = medium.sigma(i, j);
            let k = sig * dt / (2.0 * eps);
            ca[idx(i, j)] = (1.0 - k) / (1.0 + k);
            cb[idx(i, j)] = (dt / eps) / (1.0 + k);
        }
    }
    let ch = dt / (MU0 * dx);

    let px = pml_profile(nx, grid.pml_cells, dx, dt);
    let py = pml_profile(ny, grid.pml_cells, dx, dt);

    let mut ez = vec![0.0f64; nx * ny];
    let mut hx = vec![0.0f64; nx * ny]; // Hx(i, j+1/2) stored at (i, j)
    let mut hy = vec![0.0f64; nx * ny]; // Hy(i+1/2, j) stored at (i, j)

    // CPML memory variables, allocated full-grid but only touched where the
    // recursion coefficients are nonzero.
    let mut psi_hx = vec![0.0f64; nx * ny]; // for dEz/dy in the Hx update
    let mut psi_hy = vec![0.0f64; nx * ny]; // for dEz/dx in the Hy update
    let mut psi_ex = vec![0.0f64; nx * ny]; // for dHy/dx in the Ez update
    let mut psi_ey = vec![0.0f64; nx * ny]; // for dHx/dy in the Ez update

    // Active PML strip index ranges (plus one guard cell).
    let strip = |n: usize, npml: usize| -> (usize, usize) { (npml + 1, n - npml - 1) };
    let (sx_lo, sx_hi) = strip(nx, grid.pml_cells);
    let (sy_lo, sy_hi) = strip(ny, grid.pml_cells);

    // Soft source distributed bilinearly over the four surrounding nodes.
    let (si, sj, sfx, sfy) = bilinear(grid, source.position.0, source.position.1);
    let src_nodes = [
        (idx(si, sj), (1.0 - sfx) * (1.0 - sfy)),
        (idx(si + 1, sj), sfx * (1.0 - sfy)),
        (idx(si, sj + 1), (1.0 - sfx) * sfy),
        (idx(si + 1, sj + 1), sfx * sfy),
    ];
    let omega = 2.0 * std::f64::consts::PI * source.frequency;
    let ramp_end = 2.0 / source.frequency; // 2-cycle raised-cosine switch-on

    let rx_nodes: Vec<(usize, usize, f64, f64)> = receivers
        .positions
        .iter()
        .map(|&(x, y)| bilinear(grid, x, y))
        .collect();

    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(steps); receivers.len()];

    for n in 0..steps {
        // -- H update -------------------------------------------------
        for j in 0..ny - 1 {
            let row = j * nx;
            for i in 0..nx {
                let dezdy = ez[row + nx + i] - ez[row + i];
                hx[row + i] -= ch * dezdy;
            }
        }
        for j in 0..ny {
            let row = j * nx;
            for i in 0..nx - 1 {
                let dezdx = ez[row + i + 1] - ez[row + i];
                hy[row + i] += ch * dezdx;
            }
        }
        // CPML corrections in the y strips (Hx) and x strips (Hy).
        for j in (0..ny - 1).filter(|&j| j < sy_lo || j >= sy_hi) {
            let (b, c) = (py.b_h[j], py.c_h[j]);
            let row = j * nx;
            for i in 0..nx {
                let dezdy = (ez[row + nx + i] - ez[row + i]) / dx;
                let p = b * psi_hx[row + i] + c * dezdy;
                psi_hx[row + i] = p;
                hx[row + i] -= dt / MU0 * p;
            }
        }
        for j in 0..ny {
            let row = j * nx;
            for i in (0..nx - 1).filter(|&i| i < sx_lo || i >= sx_hi) {
                let dezdx = (ez[row + i + 1] - ez[row + i]) / dx;
                let p = b_c(&px.b_h, &px.c_h, i, psi_hy[row + i], dezdx);
                psi_hy[row + i] = p;
                hy[row + i] += dt / MU0 * p;
            }
        }

        // -- Ez update ------------------------------------------------
        let mut max_abs = 0.0f64;
        for j in 1..ny - 1 {
            let row = j * nx;
            for i in 1..nx - 1 {
                let k = row + i;
                let curl = (hy[k] - hy[k - 1]) - (hx[k] - hx[k - nx]);
                let v = ca[k] * ez[k] + cb[k] / dx * curl;
                ez[k] = v;
                max_abs = max_abs.max(v.abs());
            }
        }
        for j in 1..ny - 1 {
            let row = j * nx;
            for i in (1..nx - 1).filter(|&i| i < sx_lo || i >= sx_hi) {
                let k = row + i;
                let dhydx = (hy[k] - hy[k - 1]) / dx;
                let p = px.b_e[i] * psi_ex[k] + px.c_e[i] * dhydx;
                psi_ex[k] = p;
                ez[k] += cb[k] * p;
            }
        }
        for j in (1..ny - 1).filter(|&j| j < sy_lo || j >= sy_hi) {
            let (b, c) = (py.b_e[j], py.c_e[j]);
            let row = j * nx;
            for i in 1..nx - 1 {
                let k = row + i;
                let dhxdy = (hx[k] - hx[k - nx]) / dx;
                let p = b * psi_ey[k] + c * dhxdy;
                psi_ey[k] = p;
                ez[k] -= cb[k] * p;
            }
        }

        if !max_abs.is_finite() {
            return Err(FdtdError::Divergence { step: n });
        }

        // -- soft source ----------------------------------------------
        let t = (n + 1) as f64 * dt;
        let ramp = if t < ramp_end {
            0.5 * (1.0 - (std::f64::consts::PI * t / ramp_end).cos())
        } else {
            1.0
        };
        let drive = source.amplitude * ramp * (omega * t).sin();
        for &(k, w) in &src_nodes {
            ez[k] += w * drive;
        }

        // -- receiver sampling ------------------------------------------
        for (r, &(i, j, fx, fy)) in rx_nodes.iter().enumerate() {
            let k = idx(i, j);
            let v = ez[k] * (1.0 - fx) * (1.0 - fy)
                + ez[k + 1] * fx * (1.0 - fy)
                + ez[k + nx] * (1.0 - fx) * fy
                + ez[k + nx + 1] * fx * fy;
            samples[r].push(v);
        }
    }

    Ok(FieldRecord {
        dt,
        samples,
        source: source.clone(),
        receiver_positions: receivers.positions.clone(),
    })
}

#[inline]
fn b_c(b: &[f64], c: &[f64], i: usize, psi: f64, diff: f64) -> f64 {
    b[i] * psi + c[i] * diff
}

/// Runs the wall scene and the matching free-space scene with identical
/// source, receivers and step count.
pub fn run_pair(
    grid: &GridSpec,
    medium: &MediumGrid,
    source: &SourceSpec,
    receivers: &ReceiverArray,
    steps: usize,
) -> Result<(FieldRecord, FieldRecord), FdtdError> {
    let wall = run_fdtd(grid, medium, source, receivers, steps)?;
    let fs = MediumGrid::free_space(grid.nx, grid.ny);
    let freespace = run_fdtd(grid, &fs, source, receivers, steps)?;
    Ok((wall, freespace))
}
