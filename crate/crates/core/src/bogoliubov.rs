//! Order-by-order Bogoliubov coefficients.
//!
//! With α̃ = Σ ε^λ α̃⁽λ⁾, β̃ = Σ ε^λ β̃⁽λ⁾, α̃⁽⁰⁾ = 1 and β̃⁽⁰⁾ = 0,
//!
//! ```text
//! α̃⁽λ⁾(t) = Σ_{λ′<λ} ∫ [Ξ⁽λ−λ′⁾ α̃⁽λ′⁾ + Λ⁽λ−λ′⁾ β̃⁽λ′⁾*] dτ
//! β̃⁽λ⁾(t) = Σ_{λ′<λ} ∫ [Ξ⁽λ−λ′⁾ β̃⁽λ′⁾ + Λ⁽λ−λ′⁾ α̃⁽λ′⁾*] dτ
//! ```
//!
//! (matrix products over the intermediate mode). The integrals are marched
//! panel by panel with Gauss–Legendre nodes; lower orders are interpolated
//! inside a panel by Gauss collocation, i.e. by integrating the polynomial
//! through their own node integrands.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_complex::Complex64;
#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use crate::coupling::{phase_theta, CouplingSource, ExpansionCoefficients, SectorExpansion};
use crate::geometry::{MetricOrder, MirrorMotion, ModeIndex, MotionLaw};
use crate::modes::ModeSolver;
use crate::numeric::GaussLegendre;
use crate::{Error, Result};

/// Modes with n_x ≤ Nx, n_y ≤ Ny, n_z ≤ Nz in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeSet {
    modes: Vec<ModeIndex>,
    cutoffs: (u32, u32, u32),
}

impl ModeSet {
    pub fn new(nx_max: u32, ny_max: u32, nz_max: u32) -> Result<Self> {
        if nx_max == 0 || ny_max == 0 || nz_max == 0 {
            return Err(Error::InvalidParameter { name: "cutoff", reason: "must be >= 1" });
        }
        let mut modes = Vec::with_capacity((nx_max * ny_max * nz_max) as usize);
        for x in 1..=nx_max {
            for y in 1..=ny_max {
                for z in 1..=nz_max {
                    modes.push(ModeIndex::new(x, y, z)?);
                }
            }
        }
        Ok(Self { modes, cutoffs: (nx_max, ny_max, nz_max) })
    }

    /// The single transverse sector (n_x, n_y) with n_z ≤ `nz_max`.
    pub fn sector(nx: u32, ny: u32, nz_max: u32) -> Result<Self> {
        if nz_max == 0 {
            return Err(Error::InvalidParameter { name: "nz_max", reason: "must be >= 1" });
        }
        let modes = (1..=nz_max).map(|z| ModeIndex::new(nx, ny, z)).collect::<Result<Vec<_>>>()?;
        Ok(Self { modes, cutoffs: (nx, ny, nz_max) })
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn cutoffs(&self) -> (u32, u32, u32) {
        self.cutoffs
    }

    pub fn nz_max(&self) -> u32 {
        self.cutoffs.2
    }

    pub fn index_of(&self, k: &ModeIndex) -> Option<usize> {
        self.modes.binary_search(k).ok()
    }

    /// Contiguous index ranges of the transverse sectors.
    pub fn sectors(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.modes.len() {
            if i == self.modes.len() || !self.modes[i].same_sector(&self.modes[start]) {
                out.push(start..i);
                start = i;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbativeOptions {
    /// Highest order in ε (1 or 2).
    pub max_order: usize,
    /// Keep only the slowly rotating half of the first-order drive.
    pub rwa: bool,
    pub source: CouplingSource,
    pub t0: f64,
    /// Panel length as a fraction of the shortest period in play. `None`
    /// picks 1/8 at first order (plain Gauss quadrature of the coefficients)
    /// and 1/40 above, where lower orders are collocated inside each panel.
    pub panel_fraction: Option<f64>,
    pub gauss_points: usize,
    /// Also compute Θ_k at the output times (needed for untilded coefficients).
    pub phases: bool,
}

impl Default for PerturbativeOptions {
    fn default() -> Self {
        Self {
            max_order: 1,
            rwa: false,
            source: CouplingSource::Quadrature,
            t0: 0.0,
            panel_fraction: None,
            gauss_points: 8,
            phases: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateMetadata {
    pub metric_order: MetricOrder,
    pub epsilon: f64,
    pub varpi: Option<f64>,
    pub rwa: bool,
    pub cutoffs: (u32, u32, u32),
    pub t0: f64,
}

/// Coefficients of one transverse sector: `alpha[λ]`, `beta[λ]` are K×K row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBlock {
    pub range: Range<usize>,
    pub alpha: Vec<Vec<Complex64>>,
    pub beta: Vec<Vec<Complex64>>,
}

impl SectorBlock {
    fn size(&self) -> usize {
        self.range.len()
    }
}

/// Perturbative coefficients at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovState {
    pub t: f64,
    modes: ModeSet,
    blocks: Vec<SectorBlock>,
    theta: Option<Vec<f64>>,
    pub metadata: StateMetadata,
}

impl BogoliubovState {
    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn max_order(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.alpha.len() - 1)
    }

    fn locate(&self, i: usize, j: usize) -> Option<(&SectorBlock, usize, usize)> {
        let b = self.blocks.iter().find(|b| b.range.contains(&i))?;
        if !b.range.contains(&j) {
            return None;
        }
        Some((b, i - b.range.start, j - b.range.start))
    }

    fn indices(&self, k: &ModeIndex, kp: &ModeIndex) -> Result<(usize, usize)> {
        let i = self.modes.index_of(k).ok_or(Error::UnknownMode(*k))?;
        let j = self.modes.index_of(kp).ok_or(Error::UnknownMode(*kp))?;
        Ok((i, j))
    }

    /// α̃⁽λ⁾_kk′ by position in the mode set.
    pub fn alpha_order_at(&self, order: usize, i: usize, j: usize) -> Complex64 {
        match self.locate(i, j) {
            Some((b, p, q)) if order < b.alpha.len() => b.alpha[order][p * b.size() + q],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn beta_order_at(&self, order: usize, i: usize, j: usize) -> Complex64 {
        match self.locate(i, j) {
            Some((b, p, q)) if order < b.beta.len() => b.beta[order][p * b.size() + q],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn alpha_order(&self, order: usize, k: &ModeIndex, kp: &ModeIndex) -> Result<Complex64> {
        let (i, j) = self.indices(k, kp)?;
        Ok(self.alpha_order_at(order, i, j))
    }

    pub fn beta_order(&self, order: usize, k: &ModeIndex, kp: &ModeIndex) -> Result<Complex64> {
        let (i, j) = self.indices(k, kp)?;
        Ok(self.beta_order_at(order, i, j))
    }

    /// Σ_λ ε^λ α̃⁽λ⁾.
    pub fn alpha_at(&self, i: usize, j: usize, eps: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut p = 1.0;
        for l in 0..=self.max_order() {
            acc += self.alpha_order_at(l, i, j) * p;
            p *= eps;
        }
        acc
    }

    pub fn beta_at(&self, i: usize, j: usize, eps: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut p = 1.0;
        for l in 0..=self.max_order() {
            acc += self.beta_order_at(l, i, j) * p;
            p *= eps;
        }
        acc
    }

    pub fn alpha(&self, k: &ModeIndex, kp: &ModeIndex) -> Result<Complex64> {
        let (i, j) = self.indices(k, kp)?;
        Ok(self.alpha_at(i, j, self.metadata.epsilon))
    }

    pub fn beta(&self, k: &ModeIndex, kp: &ModeIndex) -> Result<Complex64> {
        let (i, j) = self.indices(k, kp)?;
        Ok(self.beta_at(i, j, self.metadata.epsilon))
    }

    /// Θ_k at this time, when computed.
    pub fn theta(&self) -> Option<&[f64]> {
        self.theta.as_deref()
    }

    /// α_kk′ = e^{−iΘ_k} α̃_kk′.
    pub fn plain_alpha(&self, k: &ModeIndex, kp: &ModeIndex) -> Result<Complex64> {
        let (i, _) = self.indices(k, kp)?;
        let th = self.theta.as_ref().ok_or(Error::Unsupported("phases were not computed"))?;
        Ok(Complex64::from_polar(1.0, -th[i]) * self.alpha(k, kp)?)
    }

    pub fn plain_beta(&self, k: &ModeIndex, kp: &ModeIndex) -> Result<Complex64> {
        let (i, _) = self.indices(k, kp)?;
        let th = self.theta.as_ref().ok_or(Error::Unsupported("phases were not computed"))?;
        Ok(Complex64::from_polar(1.0, -th[i]) * self.beta(k, kp)?)
    }

    /// Σ_k′ |β̃_kk′|² with the series truncated at the highest stored order.
    pub fn beta_row_norm_sq(&self, i: usize, eps: f64) -> f64 {
        (0..self.modes.len()).map(|j| self.beta_at(i, j, eps).norm_sqr()).sum()
    }
}

/// Integrand of order `order` from the expansion coefficients and the lower
/// orders at one instant. `lower_alpha[l]`, `lower_beta[l]` hold order l < `order`.
pub fn recurrence_integrand(
    order: usize,
    coeffs: &ExpansionCoefficients,
    lower_alpha: &[&[Complex64]],
    lower_beta: &[&[Complex64]],
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if order == 0 || lower_alpha.len() < order || lower_beta.len() < order || coeffs.order() < order {
        return Err(Error::InvalidParameter { name: "order", reason: "missing lower orders or coefficients" });
    }
    let n = coeffs.size;
    let mut da = vec![Complex64::new(0.0, 0.0); n * n];
    let mut db = da.clone();
    for lp in 0..order {
        let l = order - lp;
        let xi = &coeffs.xi[l - 1];
        let la = &coeffs.lambda[l - 1];
        let (a, b) = (lower_alpha[lp], lower_beta[lp]);
        if lp == 0 && is_identity(a, n) && b.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            for e in 0..n * n {
                da[e] += xi[e];
                db[e] += la[e];
            }
            continue;
        }
        for i in 0..n {
            for m in 0..n {
                let (x, y) = (xi[i * n + m], la[i * n + m]);
                if x == Complex64::new(0.0, 0.0) && y == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let (am, bm) = (a[m * n + j], b[m * n + j]);
                    da[i * n + j] += x * am + y * bm.conj();
                    db[i * n + j] += x * bm + y * am.conj();
                }
            }
        }
    }
    Ok((da, db))
}

fn is_identity(m: &[Complex64], n: usize) -> bool {
    m.iter().enumerate().all(|(e, z)| *z == Complex64::new(if e % (n + 1) == 0 { 1.0 } else { 0.0 }, 0.0))
}

fn identity(n: usize) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        m[i * n + i] = Complex64::new(1.0, 0.0);
    }
    m
}

/// Shortest period that the marching panels must resolve.
fn shortest_period(omega_max: f64, motion: &MirrorMotion) -> f64 {
    let two_pi = 2.0 * core::f64::consts::PI;
    let mut p = two_pi / omega_max;
    if let MotionLaw::Sine { varpi } = motion.law() {
        if *varpi > 0.0 {
            p = p.min(two_pi / varpi);
        }
    }
    p
}

/// `S[q][r] = ∫_{-1}^{x_q} L_r(x) dx` for the Lagrange basis on the rule's nodes,
/// so that node values of an integral follow from node values of its integrand.
fn collocation_matrix(rule: &GaussLegendre) -> Vec<Vec<f64>> {
    let x = rule.nodes();
    let m = x.len();
    let lagrange = |r: usize, t: f64| {
        (0..m).filter(|&j| j != r).fold(1.0, |acc, j| acc * (t - x[j]) / (x[r] - x[j]))
    };
    (0..m)
        .map(|q| {
            let half = 0.5 * (x[q] + 1.0);
            (0..m)
                .map(|r| {
                    x.iter()
                        .zip(rule.weights())
                        .map(|(&xi, &wi)| wi * half * lagrange(r, -1.0 + half * (xi + 1.0)))
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Marches one transverse sector through `t_grid`; returns one block per output time.
pub fn solve_sector(
    opts: &PerturbativeOptions,
    modes: &[ModeIndex],
    range: Range<usize>,
    t_grid: &[f64],
    motion: &MirrorMotion,
    solver: &ModeSolver,
) -> Result<Vec<SectorBlock>> {
    let order = opts.max_order;
    let n = modes.len();
    let expansion = SectorExpansion::build(modes, solver, opts.source, order >= 2)?;
    let omega_max = expansion.omega().iter().fold(0.0f64, |m, &w| m.max(w));
    let fraction = opts.panel_fraction.unwrap_or(if order == 1 { 1.0 / 8.0 } else { 1.0 / 40.0 });
    let h_max = fraction * shortest_period(omega_max, motion);
    let rule = GaussLegendre::new(opts.gauss_points);
    let colloc = collocation_matrix(&rule);
    let coeffs = |t: f64| expansion.coefficients(opts.t0, t, motion, order, opts.rwa);

    let zero = vec![Complex64::new(0.0, 0.0); n * n];
    let unit = identity(n);
    let mut alpha: Vec<Vec<Complex64>> = (0..=order).map(|l| if l == 0 { identity(n) } else { zero.clone() }).collect();
    let mut beta: Vec<Vec<Complex64>> = vec![zero.clone(); order + 1];
    let mut t = opts.t0;
    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        if target < t {
            return Err(Error::InvalidParameter { name: "t_grid", reason: "must be non-decreasing from t0" });
        }
        let panels = ((target - t) / h_max).ceil().max(0.0) as usize;
        let t_begin = t;
        for p in 0..panels {
            let ta = t;
            let tb = if p + 1 == panels { target } else { t_begin + (target - t_begin) * (p + 1) as f64 / panels as f64 };
            let half = 0.5 * (tb - ta);
            let nodes: Vec<(f64, f64)> = rule.mapped(ta, tb).collect();
            let c_nodes: Vec<ExpansionCoefficients> = nodes.iter().map(|&(x, _)| coeffs(x)).collect::<Result<_>>()?;
            // node values of each completed order above zero
            let mut node_alpha: Vec<Vec<Vec<Complex64>>> = Vec::new();
            let mut node_beta: Vec<Vec<Vec<Complex64>>> = Vec::new();
            for l in 1..=order {
                let mut d_nodes = Vec::with_capacity(nodes.len());
                for q in 0..nodes.len() {
                    let mut la: Vec<&[Complex64]> = vec![&unit];
                    let mut lb: Vec<&[Complex64]> = vec![&zero];
                    la.extend((1..l).map(|o| node_alpha[o - 1][q].as_slice()));
                    lb.extend((1..l).map(|o| node_beta[o - 1][q].as_slice()));
                    d_nodes.push(recurrence_integrand(l, &c_nodes[q], &la, &lb)?);
                }
                let start_a = alpha[l].clone();
                let start_b = beta[l].clone();
                for (q, (da, db)) in d_nodes.iter().enumerate() {
                    let w = nodes[q].1;
                    for e in 0..n * n {
                        alpha[l][e] += da[e] * w;
                        beta[l][e] += db[e] * w;
                    }
                }
                if l < order {
                    let mut na = Vec::with_capacity(nodes.len());
                    let mut nb = Vec::with_capacity(nodes.len());
                    for row in &colloc {
                        let mut va = start_a.clone();
                        let mut vb = start_b.clone();
                        for (r, (da, db)) in d_nodes.iter().enumerate() {
                            let s = row[r] * half;
                            for e in 0..n * n {
                                va[e] += da[e] * s;
                                vb[e] += db[e] * s;
                            }
                        }
                        na.push(va);
                        nb.push(vb);
                    }
                    node_alpha.push(na);
                    node_beta.push(nb);
                }
            }
            t = tb;
        }
        out.push(SectorBlock { range: range.clone(), alpha: alpha.clone(), beta: beta.clone() });
    }
    Ok(out)
}

/// Solves every sector of `modes` and assembles one state per time in `t_grid`.
pub fn solve_perturbative(
    opts: &PerturbativeOptions,
    modes: &ModeSet,
    t_grid: &[f64],
    motion: &MirrorMotion,
    solver: &ModeSolver,
) -> Result<Vec<BogoliubovState>> {
    if !(opts.max_order == 1 || opts.max_order == 2) {
        return Err(Error::InvalidParameter { name: "max_order", reason: "must be 1 or 2" });
    }
    let mut per_sector = Vec::new();
    for r in modes.sectors() {
        per_sector.push(solve_sector(opts, &modes.modes()[r.clone()], r, t_grid, motion, solver)?);
    }
    assemble(opts, modes, t_grid, motion, solver, per_sector)
}

/// Builds states from per-sector results (one `Vec<SectorBlock>` per sector,
/// in sector order).
pub fn assemble(
    opts: &PerturbativeOptions,
    modes: &ModeSet,
    t_grid: &[f64],
    motion: &MirrorMotion,
    solver: &ModeSolver,
    per_sector: Vec<Vec<SectorBlock>>,
) -> Result<Vec<BogoliubovState>> {
    let metadata = StateMetadata {
        metric_order: solver.order(),
        epsilon: motion.epsilon(),
        varpi: motion.varpi(),
        rwa: opts.rwa,
        cutoffs: modes.cutoffs(),
        t0: opts.t0,
    };
    let mut columns: Vec<_> = per_sector.into_iter().map(|v| v.into_iter()).collect();
    let mut states = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let blocks = columns.iter_mut().map(|c| c.next().ok_or(Error::Mismatch)).collect::<Result<Vec<_>>>()?;
        let theta = if opts.phases {
            Some(modes.modes().iter().map(|k| phase_theta(k, opts.t0, t, motion, solver)).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        states.push(BogoliubovState { t, modes: modes.clone(), blocks, theta, metadata: metadata.clone() });
    }
    Ok(states)
}
