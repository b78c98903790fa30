use std::path::PathBuf;

use polarosc_core::atomic::{optical_response, self_rotation_angle, small_signal_gain, DriveField};
use polarosc_core::cavity::{run_campaign, sweep_loss, threshold_check, Helicity};
use polarosc_core::ising::{
    brute_force_ground_state, read_instance, solve, IsingProblem, MAX_BRUTE_FORCE_SPINS,
};
use polarosc_core::stats::{autocorrelation, band_containment, bernoulli_band, bias, lag_std};
use polarosc_core::HelicitySequence;
use sha2::{Digest, Sha256};

use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::output::{Cell, Csv};

fn core_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// φ(ε) over the ellipticity grid.
pub fn psr_curve(cfg: &LoadedConfig) -> Result<Vec<PathBuf>, CliError> {
    let params = cfg.atomic_params()?;
    let s = cfg.config.medium.intensity_ratio;
    let grid = cfg.config.grids.epsilon.values("epsilon")?;
    let mut csv = Csv::new("psr-curve", &cfg.hash, &["epsilon", "phi"])
        .meta("delta", params.detuning_ratio())
        .meta("intensity_ratio", s)
        .meta("gain_scale", params.gain_scale);
    for eps in grid {
        csv.row(&[Cell::F(eps), Cell::F(self_rotation_angle(&params, s, eps))]);
    }
    Ok(vec![csv.write(&cfg.output_dir(), "psr_curve.csv")?])
}

/// Slope and absorption across the detuning grid at fixed C.
///
/// `absorption` is the model's αl-like quantity for linearly polarized light.
/// `alpha_l` repeats the experimental definition ln(I_max/I) on the implied
/// transmission exp(−absorption), relative to the best-transmitted grid point.
pub fn spectrum(cfg: &LoadedConfig) -> Result<Vec<PathBuf>, CliError> {
    let params = cfg.atomic_params()?;
    let s = cfg.config.medium.intensity_ratio;
    if s <= 0.0 {
        return Err(CliError::Config(
            "spectrum needs medium.intensity_ratio > 0".into(),
        ));
    }
    let grid = cfg.config.grids.delta.values("delta")?;
    let ghz = cfg.config.medium.linewidth_ghz;

    let mut rows = Vec::with_capacity(grid.len());
    for &delta in &grid {
        let p = params.with_detuning_ratio(delta);
        let drive = DriveField::from_ellipticity(&p, s, 0.0).map_err(core_err)?;
        let absorption = optical_response(&p, &drive).map_err(core_err)?.absorption;
        rows.push((
            delta,
            small_signal_gain(&p, s),
            absorption,
            (-absorption).exp(),
        ));
    }
    let t_max = rows.iter().map(|r| r.3).fold(f64::MIN, f64::max);

    let mut header = vec!["delta", "gl", "absorption", "transmission", "alpha_l"];
    if ghz.is_some() {
        header.push("detuning_ghz");
    }
    let mut csv = Csv::new("spectrum", &cfg.hash, &header)
        .meta("intensity_ratio", s)
        .meta("gain_scale", params.gain_scale);
    for (delta, gl, absorption, t) in rows {
        let mut cells = vec![
            Cell::F(delta),
            Cell::F(gl),
            Cell::F(absorption),
            Cell::F(t),
            Cell::F((t_max / t).ln()),
        ];
        if let Some(width) = ghz {
            cells.push(Cell::F(delta * width));
        }
        csv.row(&cells);
    }
    Ok(vec![csv.write(&cfg.output_dir(), "spectrum.csv")?])
}

/// Independent oscillation events, their helicity statistics and K(m).
pub fn bistability(cfg: &LoadedConfig) -> Result<Vec<PathBuf>, CliError> {
    let medium = cfg.medium()?;
    let cav = cfg.cavity_params()?;
    let pump = cfg.config.cavity.pump;
    let b = &cfg.config.bistability;
    let seed = cfg.config.run.seed;
    let records = run_campaign(pump, &cav, &medium, b.num_events, seed).map_err(core_err)?;
    let dir = cfg.output_dir();

    let mut events = Csv::new(
        "bistability",
        &cfg.hash,
        &[
            "event",
            "seed",
            "helicity",
            "iterations",
            "converged",
            "re_ratio",
            "im_ratio",
            "e_v_re",
            "e_v_im",
        ],
    );
    for (n, rec) in records.iter().enumerate() {
        let q = rec
            .steady_state
            .decompose()
            .quadratures()
            .map_err(core_err)?;
        let e_v = rec.steady_state.e_v();
        events.row(&[
            Cell::U(n as u64),
            Cell::U(rec.seed),
            Cell::I(rec.helicity.value().into()),
            Cell::U(rec.iterations as u64),
            Cell::B(rec.converged),
            Cell::F(q.re_ratio),
            Cell::F(q.im_ratio),
            Cell::F(e_v.re),
            Cell::F(e_v.im),
        ]);
    }

    let seq = HelicitySequence::from_helicities(records.iter().map(|r| r.helicity));
    let plus = seq.values().iter().filter(|&&v| v == 1).count();
    let not_converged = records.iter().filter(|r| !r.converged).count();
    let band = bernoulli_band(seq.len().max(1), b.band_sigmas);
    let max_lag = b.max_lag.min(seq.len().saturating_sub(1));
    let k = if seq.is_empty() {
        Vec::new()
    } else {
        autocorrelation(&seq, max_lag).map_err(core_err)?
    };
    let status = if seq.is_empty() {
        "no oscillation"
    } else if records.iter().any(|r| r.helicity == Helicity::Zero) {
        "partial oscillation"
    } else {
        "oscillation"
    };

    let mut summary = Csv::new("bistability", &cfg.hash, &["quantity", "value"]);
    let mut put = |key: &str, value: Cell| summary.row(&[Cell::S(key.into()), value]);
    put("status", Cell::S(status.into()));
    put("events", Cell::U(records.len() as u64));
    put("plus", Cell::U(plus as u64));
    put("minus", Cell::U((seq.len() - plus) as u64));
    put("zero", Cell::U(seq.zeros() as u64));
    put("not_converged", Cell::U(not_converged as u64));
    put("bias", bias(&seq).map_or(Cell::S("nan".into()), Cell::F));
    put("band_sigmas", Cell::F(b.band_sigmas));
    put("band", Cell::F(band));
    put("max_lag", Cell::U(max_lag as u64));
    put("k_rms", Cell::F(lag_std(&k)));
    put("band_containment", Cell::F(band_containment(&k, band)));

    let mut table = Csv::new("bistability", &cfg.hash, &["lag", "k", "band", "inside"]);
    for (m, v) in k.iter().enumerate() {
        table.row(&[
            Cell::U(m as u64),
            Cell::F(*v),
            Cell::F(band),
            Cell::B(m == 0 || v.abs() <= band),
        ]);
    }

    Ok(vec![
        events.write(&dir, "bistability_events.csv")?,
        summary.write(&dir, "bistability_summary.csv")?,
        table.write(&dir, "autocorrelation.csv")?,
    ])
}

/// Steady-state quadratures against roundtrip transmission.
pub fn loss_sweep(cfg: &LoadedConfig) -> Result<Vec<PathBuf>, CliError> {
    let medium = cfg.medium()?;
    let cav = cfg.cavity_params()?;
    let grid = cfg.config.grids.eta.values("eta")?;
    let gl = medium.gain();
    let rows = sweep_loss(
        cfg.config.cavity.pump,
        &medium,
        &cav,
        &grid,
        cfg.config.loss_sweep.runs_per_point,
        cfg.config.run.seed,
    )
    .map_err(core_err)?;
    let mut csv = Csv::new(
        "loss-sweep",
        &cfg.hash,
        &[
            "eta",
            "mean_re_ratio",
            "mean_im_ratio",
            "above_threshold",
            "runs",
            "not_converged",
            "oscillating",
        ],
    )
    .meta("gl", gl)
    .meta("psi", cav.psi);
    for r in rows {
        let above = threshold_check(gl, r.eta).map_err(core_err)?.above;
        csv.row(&[
            Cell::F(r.eta),
            Cell::F(r.mean_re_ratio),
            Cell::F(r.mean_im_ratio),
            Cell::B(above),
            Cell::U(r.runs as u64),
            Cell::U(r.not_converged as u64),
            Cell::U(r.oscillating as u64),
        ]);
    }
    Ok(vec![csv.write(&cfg.output_dir(), "loss_sweep.csv")?])
}

/// Coupled-mode search on the configured instance, optionally checked
/// against exhaustive enumeration.
pub fn ising(cfg: &LoadedConfig, oracle: bool) -> Result<Vec<PathBuf>, CliError> {
    let section = cfg
        .config
        .ising
        .as_ref()
        .ok_or_else(|| CliError::Config("the ising command needs an [ising] section".into()))?;
    let path = cfg.instance_path().expect("section present");
    let text = std::fs::read(&path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let j =
        read_instance(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let problem = IsingProblem::new(j, section.kappa).map_err(core_err)?;
    if oracle && problem.n() > MAX_BRUTE_FORCE_SPINS {
        return Err(CliError::OracleRefused(problem.n(), MAX_BRUTE_FORCE_SPINS));
    }
    let medium = cfg.medium()?;
    let cav = cfg.cavity_params()?;
    let sol = solve(
        &problem,
        cfg.config.cavity.pump,
        &cav,
        &medium,
        section.restarts,
        cfg.config.run.seed,
    )
    .map_err(core_err)?;
    let instance_hash = hex::encode(Sha256::digest(&text));
    let dir = cfg.output_dir();

    let mut restarts = Csv::new(
        "ising",
        &cfg.hash,
        &[
            "restart",
            "seed",
            "spins",
            "energy",
            "iterations",
            "converged",
            "undecided",
        ],
    )
    .meta("instance_sha256", &instance_hash);
    for (r, rec) in sol.restarts.iter().enumerate() {
        restarts.row(&[
            Cell::U(r as u64),
            Cell::U(rec.seed),
            Cell::S(rec.spins.to_string()),
            Cell::F(rec.energy),
            Cell::U(rec.iterations as u64),
            Cell::B(rec.converged),
            Cell::U(rec.undecided as u64),
        ]);
    }

    let mut report = Csv::new("ising", &cfg.hash, &["quantity", "value"])
        .meta("instance_sha256", &instance_hash);
    let mut put = |key: &str, value: Cell| report.row(&[Cell::S(key.into()), value]);
    put("n", Cell::U(problem.n() as u64));
    put("restarts", Cell::U(sol.restarts.len() as u64));
    put("best_spins", Cell::S(sol.best.to_string()));
    put("best_energy", Cell::F(sol.best_energy));
    put(
        "not_converged",
        Cell::U(sol.restarts.iter().filter(|r| !r.converged).count() as u64),
    );
    if oracle {
        let (ground, energy) = brute_force_ground_state(&problem).map_err(core_err)?;
        let tol = 1e-9 * (1.0 + energy.abs());
        put("oracle_spins", Cell::S(ground.to_string()));
        put("oracle_energy", Cell::F(energy));
        put("match", Cell::B((sol.best_energy - energy).abs() <= tol));
        put("hit_rate", Cell::F(sol.hit_rate(energy, tol)));
    }

    Ok(vec![
        restarts.write(&dir, "ising_restarts.csv")?,
        report.write(&dir, "ising_report.csv")?,
    ])
}
