//! The four subcommands, each producing a [`Table`].

use dce_core::bogoliubov::{self, BogoliubovState, ModeSet, PerturbativeOptions};
use dce_core::geometry::{
    from_proper_units, to_proper_units, CavityConfig, MetricOrder, MetricParams, MirrorMotion, ModeIndex,
};
use dce_core::modes::{ModeSolver, SolverOptions};
use dce_core::observables::{n_final, n_first_order, n_fundamental, n_second_order, proper_time_for, tau_p};
use dce_core::oracle::{self, OracleOptions, OracleRun};
use rayon::prelude::*;

use crate::checks::{self, Check};
use crate::config::{Axis, Drive, Duration, RunConfig};
use crate::table::{Cell, Table};
use crate::{CliError, CliResult};

pub const SPECTRUM_SCHEMA: &str = "dce-spectrum/1";
pub const MODES_SCHEMA: &str = "dce-modes/1";
pub const SWEEP_SCHEMA: &str = "dce-sweep/1";
pub const VALIDATE_SCHEMA: &str = "dce-validate/1";

/// Column reference for `--help`.
pub const COLUMNS_HELP: &str = "\
spectrum (dce-spectrum/1), one row per mode inside the cutoffs:
  nx,ny,nz        mode numbers
  omega           frequency at rest used by the modes
  n_closed        closed form for the driven mode under parametric drive
                  (fundamental formula for (1,1,1), general formula otherwise)
  n_final         general closed form for the driven mode
  n_series        first- or second-order sum over the axial cutoff
  n_perturbative  perturbative pipeline, sum over k' of |beta_kk'|^2
  n_oracle        exact truncated system (only with --oracle)
  methods         which of the above are filled
modes (dce-modes/1): nx,ny,nz,omega_first,omega_first_exact,omega_second_approx,
  omega_second_root,residual,normalization; '# orthonormality' and '# boundary'
  metadata give the largest deviations inside each sector
sweep (dce-sweep/1): sweep_<axis>,nx,ny,nz,chi,gamma_a_p,tau_p,varpi,n_closed,n_final,
  n_series[,n_perturbative][,n_oracle]
validate (dce-validate/1): check,suite,status,measured,bound
Every file starts with '# schema' and '# config-sha256' lines.";

fn config_error(e: dce_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Everything derived from a configuration before any time integration.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: RunConfig,
    pub metric: MetricParams,
    pub solver: ModeSolver,
    pub motion: MirrorMotion,
    pub varpi: f64,
    pub a_p: f64,
    pub t: f64,
    pub t_p: f64,
    pub tau_p: f64,
}

impl Context {
    pub fn new(cfg: &RunConfig) -> CliResult<Self> {
        let metric = cfg.metric().map_err(config_error)?;
        let cavity = CavityConfig::new(cfg.a0).map_err(config_error)?;
        let opts = SolverOptions { quad_tol: cfg.quad_tol, ..Default::default() };
        let solver = ModeSolver::auto(cavity, metric, cfg.metric_order, opts).map_err(config_error)?;
        let order = solver.order();
        let a0 = cfg.a0;
        let eps = cfg.epsilon;
        let a_p = match order {
            MetricOrder::First => to_proper_units(a0, 0.0, &metric, order).a_p,
            MetricOrder::Second => a0 / (1.0 + cfg.chi + 0.5 * cfg.gamma_a_p),
        };
        let (t, t_p, tp) = match cfg.duration {
            Duration::TauP(x) => {
                if eps == 0.0 {
                    return Err(CliError::Config("tau_p needs a nonzero epsilon; give `t` instead".into()));
                }
                let t_p = proper_time_for(x, eps, a0);
                (from_proper_units(a_p, t_p, &metric, order).1, t_p, x)
            }
            Duration::Coordinate(t) => {
                let t_p = to_proper_units(a0, t, &metric, order).t_p;
                (t, t_p, tau_p(eps, t_p, a0))
            }
        };
        let varpi = match cfg.drive {
            Drive::Parametric => 2.0 * solver.frequency(&cfg.mode, a0)?,
            Drive::Explicit(v) => v,
        };
        let motion = MirrorMotion::sine(eps, varpi).map_err(config_error)?;
        Ok(Self { cfg: cfg.clone(), metric, solver, motion, varpi, a_p, t, t_p, tau_p: tp })
    }

    fn parametric(&self) -> bool {
        self.cfg.drive == Drive::Parametric
    }

    /// General closed form for the driven mode.
    pub fn n_final(&self) -> Option<f64> {
        self.parametric().then(|| n_final(&self.cfg.mode, self.tau_p, self.cfg.chi, self.cfg.gamma_a_p))
    }

    /// Fundamental formula for (1,1,1), general formula otherwise.
    pub fn n_closed(&self) -> Option<f64> {
        if self.cfg.mode == ModeIndex::FUNDAMENTAL {
            self.parametric().then(|| n_fundamental(self.tau_p, self.cfg.chi, self.cfg.gamma_a_p))
        } else {
            self.n_final()
        }
    }

    pub fn n_series(&self, k: &ModeIndex) -> CliResult<f64> {
        let c = &self.cfg;
        Ok(match self.solver.order() {
            MetricOrder::First => n_first_order(k, c.epsilon, self.varpi, self.t, &self.metric, c.a0, c.nz_max)?,
            MetricOrder::Second => n_second_order(k, c.epsilon, self.varpi, self.t, &self.solver, c.nz_max)?,
        })
    }

    pub fn pipeline(&self, modes: &ModeSet) -> CliResult<BogoliubovState> {
        let c = &self.cfg;
        let opts = PerturbativeOptions {
            max_order: c.pert_order,
            rwa: c.rwa,
            source: c.coupling_source(self.solver.order()),
            phases: false,
            ..Default::default()
        };
        let grid = [self.t];
        let per_sector = modes
            .sectors()
            .into_par_iter()
            .map(|r| bogoliubov::solve_sector(&opts, &modes.modes()[r.clone()], r, &grid, &self.motion, &self.solver))
            .collect::<dce_core::Result<Vec<_>>>()?;
        let mut states = bogoliubov::assemble(&opts, modes, &grid, &self.motion, &self.solver, per_sector)?;
        Ok(states.remove(0))
    }

    pub fn oracle(&self, modes: &ModeSet) -> CliResult<OracleRun> {
        let c = &self.cfg;
        let opts = OracleOptions {
            rtol: c.rtol,
            atol: c.atol,
            source: c.coupling_source(self.solver.order()),
            ..Default::default()
        };
        let grid = [self.t];
        let per_sector = modes
            .sectors()
            .into_par_iter()
            .map(|r| oracle::integrate_sector(&opts, &modes.modes()[r.clone()], r, &grid, &self.motion, &self.solver))
            .collect::<dce_core::Result<Vec<_>>>()?;
        Ok(oracle::assemble(&opts, modes, &grid, &self.motion, per_sector))
    }
}

fn header_meta(t: &mut Table, cfg: &RunConfig) {
    t.meta("config-sha256", cfg.hash());
    t.meta("version", env!("CARGO_PKG_VERSION"));
}

fn mode_cells(k: &ModeIndex) -> Vec<Cell> {
    vec![k.nx().into(), k.ny().into(), k.nz().into()]
}

fn methods(cells: &[(&str, &Cell)]) -> Cell {
    let used: Vec<&str> = cells.iter().filter(|(_, c)| **c != Cell::Empty).map(|(n, _)| *n).collect();
    used.join("+").into()
}

pub fn spectrum(cfg: &RunConfig) -> CliResult<Table> {
    let ctx = Context::new(cfg)?;
    let modes = ModeSet::new(cfg.nx_max, cfg.ny_max, cfg.nz_max).map_err(config_error)?;
    let target = modes
        .index_of(&cfg.mode)
        .ok_or_else(|| CliError::Config(format!("mode {} lies outside the cutoffs", cfg.mode)))?;
    let state = ctx.pipeline(&modes)?;
    let run = if cfg.oracle { Some(ctx.oracle(&modes)?) } else { None };

    let mut header = vec!["nx", "ny", "nz", "omega", "n_closed", "n_final", "n_series", "n_perturbative"];
    if run.is_some() {
        header.push("n_oracle");
    }
    header.push("methods");
    let mut table = Table::new(SPECTRUM_SCHEMA, &header);
    header_meta(&mut table, cfg);
    table.meta("metric-order", ctx.solver.order().number());
    table.meta("varpi", format!("{:.16e}", ctx.varpi));
    table.meta("t", format!("{:.16e}", ctx.t));
    table.meta("t_p", format!("{:.16e}", ctx.t_p));
    table.meta("tau_p", format!("{:.16e}", ctx.tau_p));
    table.meta("a_p", format!("{:.16e}", ctx.a_p));
    if let Some(r) = &run {
        table.meta("unitarity-defect", format!("{:.16e}", r.max_unitarity_defect()));
    }

    let rows = modes
        .modes()
        .par_iter()
        .enumerate()
        .map(|(i, k)| -> CliResult<Vec<Cell>> {
            let driven = i == target;
            let closed = Cell::from(if driven { ctx.n_closed() } else { None });
            let fin = Cell::from(if driven { ctx.n_final() } else { None });
            let series = Cell::from(ctx.n_series(k)?);
            let pert = Cell::from(state.beta_row_norm_sq(i, cfg.epsilon));
            let orc = run.as_ref().map(|r| Cell::from(r.samples[0].beta_row_norm_sq(i)));
            let mut named = vec![("closed", &closed), ("final", &fin), ("series", &series), ("perturbative", &pert)];
            if let Some(o) = &orc {
                named.push(("oracle", o));
            }
            let tag = methods(&named);
            let mut row = mode_cells(k);
            row.push(ctx.solver.frequency(k, cfg.a0)?.into());
            row.extend([closed.clone(), fin.clone(), series.clone(), pert.clone()]);
            row.extend(orc.clone());
            row.push(tag);
            Ok(row)
        })
        .collect::<CliResult<Vec<_>>>()?;
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

pub fn modes(cfg: &RunConfig) -> CliResult<Table> {
    let metric = cfg.metric().map_err(config_error)?;
    let cavity = CavityConfig::new(cfg.a0).map_err(config_error)?;
    let opts = SolverOptions { quad_tol: cfg.quad_tol, ..Default::default() };
    let first = ModeSolver::new(cavity, metric, MetricOrder::First, opts.clone())?;
    let second = if metric.gamma() > 0.0 {
        Some(ModeSolver::new(cavity, metric, MetricOrder::Second, opts)?)
    } else {
        None
    };
    let main = match (&second, cfg.metric_order) {
        (Some(s), MetricOrder::Second) => s,
        _ => &first,
    };
    let set = ModeSet::new(cfg.nx_max, cfg.ny_max, cfg.nz_max).map_err(config_error)?;
    let a0 = cfg.a0;
    let mut table = Table::new(
        MODES_SCHEMA,
        &[
            "nx",
            "ny",
            "nz",
            "omega_first",
            "omega_first_exact",
            "omega_second_approx",
            "omega_second_root",
            "residual",
            "normalization",
        ],
    );
    header_meta(&mut table, cfg);
    table.meta("metric-order", main.order().number());

    let rows = set
        .modes()
        .par_iter()
        .map(|k| -> CliResult<Vec<Cell>> {
            let w1 = first.closed_form_frequency(k, a0);
            let w1x = first.frequency(k, a0)?;
            let (w2, w2r) = match &second {
                Some(s) => (s.closed_form_frequency(k, a0), s.frequency(k, a0)?),
                None => (w1, w1x),
            };
            let mut row = mode_cells(k);
            row.extend([w1, w1x, w2, w2r, main.mode_ode_residual(k, a0)?, main.mode(k, a0)?.normalization()].map(Cell::from));
            Ok(row)
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut ortho = 0.0f64;
    let mut edge = 0.0f64;
    for r in set.sectors() {
        let sector = &set.modes()[r];
        let built = sector.par_iter().map(|k| main.mode(k, a0)).collect::<dce_core::Result<Vec<_>>>()?;
        let devs = (0..built.len())
            .into_par_iter()
            .map(|i| -> dce_core::Result<f64> {
                let mut w = 0.0f64;
                for j in i..built.len() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    let g = dce_core::modes::inner_product(&built[i], &built[j], main.options())?;
                    w = w.max((g - target).abs());
                }
                Ok(w)
            })
            .collect::<dce_core::Result<Vec<_>>>()?;
        ortho = devs.into_iter().fold(ortho, f64::max);
        for u in &built {
            let peak = (0..=400).map(|i| u.axial(a0 * i as f64 / 400.0).abs()).fold(0.0, f64::max);
            edge = edge.max(u.axial(0.0).abs().max(u.axial(a0).abs()) / peak);
        }
    }
    table.meta("orthonormality", format!("{ortho:.16e}"));
    table.meta("boundary", format!("{edge:.16e}"));
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

fn point_config(base: &RunConfig, v: f64) -> CliResult<RunConfig> {
    let mut c = base.clone();
    match base.axis {
        Axis::GammaAp => c.set_gamma_a_p(v),
        Axis::Chi => c.set_chi(v),
        Axis::TauP => c.duration = Duration::TauP(v),
        Axis::Varpi => c.drive = Drive::Explicit(v),
        Axis::Nz => {
            let nz = v.round();
            if nz < 1.0 || (v - nz).abs() > 1e-9 {
                return Err(CliError::Config(format!("nz sweep value {v} is not a positive integer")));
            }
            c.mode = c.mode.with_nz(nz as u32).map_err(config_error)?;
            c.nz_max = c.nz_max.max(nz as u32);
        }
    }
    if base.inverse_norm {
        match c.duration {
            Duration::TauP(x) => c.duration = Duration::TauP(x / c.mode.norm()),
            Duration::Coordinate(_) => {
                return Err(CliError::Config("tau_scaling = inverse-norm needs tau_p, not t".into()));
            }
        }
    }
    Ok(c)
}

pub fn sweep(cfg: &RunConfig) -> CliResult<Table> {
    let axis = format!("sweep_{}", cfg.axis.name());
    let mut header = vec![
        axis.as_str(),
        "nx",
        "ny",
        "nz",
        "chi",
        "gamma_a_p",
        "tau_p",
        "varpi",
        "n_closed",
        "n_final",
        "n_series",
    ];
    if cfg.pipeline {
        header.push("n_perturbative");
    }
    if cfg.oracle {
        header.push("n_oracle");
    }
    let mut table = Table::new(SWEEP_SCHEMA, &header);
    header_meta(&mut table, cfg);
    let rows = cfg
        .sweep_values()
        .into_par_iter()
        .map(|v| -> CliResult<Vec<Cell>> {
            let c = point_config(cfg, v)?;
            let ctx = Context::new(&c)?;
            let k = c.mode;
            let mut row = vec![Cell::from(v)];
            row.extend(mode_cells(&k));
            row.extend([c.chi, c.gamma_a_p, ctx.tau_p, ctx.varpi].map(Cell::from));
            row.push(ctx.n_closed().into());
            row.push(ctx.n_final().into());
            row.push(ctx.n_series(&k)?.into());
            if c.pipeline || c.oracle {
                let set = ModeSet::sector(k.nx(), k.ny(), c.nz_max).map_err(config_error)?;
                let i = set.index_of(&k).expect("driven mode lies in its sector");
                if c.pipeline {
                    row.push(ctx.pipeline(&set)?.beta_row_norm_sq(i, c.epsilon).into());
                }
                if c.oracle {
                    row.push(ctx.oracle(&set)?.samples[0].beta_row_norm_sq(i).into());
                }
            }
            Ok(row)
        })
        .collect::<CliResult<Vec<_>>>()?;
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

/// Runs the configured suite; the table lists every check, `failures` counts the red ones.
pub fn validate(cfg: &RunConfig) -> CliResult<(Table, usize)> {
    let results: Vec<Check> = checks::run(cfg)?;
    let mut table = Table::new(VALIDATE_SCHEMA, &["check", "suite", "status", "measured", "bound"]);
    header_meta(&mut table, cfg);
    let mut failures = 0;
    for c in results {
        if !c.passed {
            failures += 1;
        }
        table.push(vec![
            c.name.into(),
            c.suite.into(),
            if c.passed { "pass" } else { "fail" }.into(),
            c.measured.into(),
            c.bound.into(),
        ]);
    }
    Ok((table, failures))
}
