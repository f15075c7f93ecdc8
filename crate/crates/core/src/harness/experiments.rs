use serde::Serialize;
use serde_json::json;

use super::config::{ExperimentConfig, StateKind};
use super::output::{flow_files, parse_landmarks_csv, parse_trajectory_csv, Landmark, OutputFile};
use super::report::channel_bell_fidelity;
use super::result::{CheckOutcome, DiscrepancyEntry, ExperimentResult, MeanStd, ProtocolRow};
use crate::channels::{amplitude_damping, depolarizing, depolarizing_eb_threshold, DDConfig, DDMode};
use crate::convention::Convention;
use crate::dynamics::{
    damping_suppression, delta_er, er_production_rate, fidelity_decay, trajectory, werner_er, TrajectoryForm,
};
use crate::entanglement::{er_bell_diagonal, er_numeric, er_pure, er_two_qubit, er_werner, negativity, WernerBridge};
use crate::error::{Error, Result};
use crate::oracle;
use crate::protocols::{
    calibrate_pes, dejmps_branch_map, dejmps_monte_carlo, dejmps_recursive, effective_channel, hashing_rate,
    pes_pipeline, pre_rotation_search_ad, DistillationOutcome, MonteCarloSettings, MonteCarloStats,
};
use crate::qstate::{gates, von_neumann_entropy, BellDiagonalState, DensityMatrix, C64};

const PS_CLAIM_T1: (f64, f64) = (0.31, 0.02);
const ER_CLAIM_T1: (f64, f64) = (0.013, 0.004);
const RATE_CLAIM_T1: f64 = 0.004;
const PES_CLAIM_T1: (f64, f64) = (0.187, 0.009);
const GOOD_ER_CLAIM: f64 = 0.78;
const PS_CLAIM_T2: (f64, f64) = (0.28, 0.02);
const ER_CLAIM_T2: (f64, f64) = (0.021, 0.006);
const RATE_CLAIM_T2: f64 = 0.006;
const PES_CLAIM_T2: (f64, f64) = (0.156, 0.011);
const DAMPING_DELTA_CLAIM: f64 = 0.135;
/// Half a unit in the last printed digit of a three-decimal claim.
const ROUNDING: f64 = 5e-4;

fn tol(std: f64) -> f64 {
    3.0 * std
}

/// Three standard deviations of `a / b` from independent relative errors.
fn ratio_tolerance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let r = a.0 / b.0;
    3.0 * r * ((a.1 / a.0).powi(2) + (b.1 / b.0).powi(2)).sqrt()
}

/// Werner parameter `(4 c₀ − 1)/3` and linear entropy `(4/3)(1 − Σ c²)`.
fn plane_coordinates(s: &BellDiagonalState) -> (f64, f64) {
    let c = s.coefficients();
    let purity: f64 = c.iter().map(|x| x * x).sum();
    ((4.0 * c[0] - 1.0) / 3.0, 4.0 / 3.0 * (1.0 - purity))
}

fn mc_settings(cfg: &ExperimentConfig) -> MonteCarloSettings {
    MonteCarloSettings {
        runs: cfg.runs,
        master_seed: cfg.seed,
        workers: None,
        batches: cfg.batches,
    }
}

/// DD configuration implied by the config. Without an explicit noise density
/// the parametric mode is set so that `p` compresses to `p_prime`.
pub(crate) fn dd_config(cfg: &ExperimentConfig) -> Result<DDConfig> {
    let dd = match cfg.dd_mode {
        DDMode::Parametric => {
            let gamma_sd = match cfg.dd_noise_density {
                Some(g) => g,
                None => {
                    if cfg.p_prime > cfg.p || cfg.p_prime <= 0.0 {
                        return Err(Error::Config(format!(
                            "p_prime = {} is not reachable from p = {} by decoupling; set dd_noise_density",
                            cfg.p_prime, cfg.p
                        )));
                    }
                    cfg.dd_frequency * (cfg.p / cfg.p_prime).ln()
                }
            };
            DDConfig::parametric(cfg.dd_frequency, gamma_sd)
        }
        DDMode::PulseAverage => {
            let mut dd = DDConfig::pulse_average(cfg.dd_pulse_count, gates::paulis().to_vec());
            dd.frame_corrected = cfg.dd_frame_corrected;
            dd
        }
    };
    dd.validate()?;
    Ok(dd)
}

#[derive(Serialize)]
struct ExactSummary {
    success_probability: f64,
    pairs_consumed: usize,
    output_pairs: usize,
    selected_fidelity: Option<f64>,
    er_selected: Option<f64>,
    er_global: f64,
    er_global_per_pair: f64,
    er_branch_average: f64,
    er_trash: Option<f64>,
    er_global_trash_mixed: Option<f64>,
    effective_rate: f64,
}

fn summarize(o: &DistillationOutcome) -> Result<ExactSummary> {
    let er_selected = o.er_selected()?;
    let er_global = o.er_global()?;
    Ok(ExactSummary {
        success_probability: o.success_probability,
        pairs_consumed: o.pairs_consumed,
        output_pairs: o.output_pairs(),
        selected_fidelity: o.selected_fidelity(),
        er_selected,
        er_global,
        er_global_per_pair: er_global / o.pairs_consumed as f64,
        er_branch_average: o.er_branch_average()?,
        er_trash: o.er_trash()?,
        er_global_trash_mixed: o.er_global_trash_mixed()?,
        effective_rate: o.success_probability * er_selected.unwrap_or(0.0) / o.pairs_consumed as f64,
    })
}

fn post_row(name: &str, convention: Option<&str>, exact: &ExactSummary, mc: &MonteCarloStats) -> ProtocolRow {
    let n = exact.pairs_consumed as f64;
    ProtocolRow {
        protocol: name.to_string(),
        convention: convention.map(str::to_string),
        er_global_per_pair: MeanStd {
            mean: mc.global_er.mean / n,
            std: mc.global_er.std / n,
        },
        success_probability: Some(MeanStd {
            mean: mc.success_probability_batches.mean,
            std: mc.success_probability_batches.std,
        }),
        effective_rate: exact.effective_rate,
        converged: true,
        note: format!(
            "{} runs; exact tree p_s = {:.6}, E_R(global)/pair = {:.6}",
            mc.runs, exact.success_probability, exact.er_global_per_pair
        ),
    }
}

fn deterministic_row(name: &str, convention: Option<&str>, er: f64, converged: bool, note: String) -> ProtocolRow {
    ProtocolRow {
        protocol: name.to_string(),
        convention: convention.map(str::to_string),
        er_global_per_pair: MeanStd::exact(er),
        success_probability: None,
        effective_rate: er,
        converged,
        note,
    }
}

/// Bell-diagonal pair after the depolarizing channel acts on both halves.
fn two_sided_pair(p: f64) -> Result<BellDiagonalState> {
    let rho = depolarizing(p)?.apply_each(&DensityMatrix::bell_phi_plus(), &[0, 1])?;
    BellDiagonalState::from_density(&rho, 1e-10)
}

pub(crate) fn table1(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> Result<()> {
    let p = cfg.p;
    let n = cfg.n_pairs;
    let channel = depolarizing(p)?;
    let dd = dd_config(cfg)?;
    let shaped = effective_channel(&channel, Some(&dd))?;
    let p_eff = 1.0 - channel_bell_fidelity(&shaped)?;
    res.detail("effective_p_prime", p_eff);
    res.detail("hashing_rate", hashing_rate(p)?);

    // Channel-level shaping with the pre-unitary, convention free.
    let upre = pes_pipeline(n, &channel, Some(&dd), true, &cfg.solver)?;
    res.rows.push(deterministic_row(
        "pes_u_pre",
        None,
        upre.per_pair_er,
        upre.pair_er.iter().all(|r| r.converged),
        format!("pre-unitary on two-pair blocks, p' = {p_eff:.6}, per-pair reduced states"),
    ));

    for conv in cfg.convention.conventions() {
        let label = Some(conv.as_str());
        let input = conv.pair_state(p)?;
        let exact_outcome = dejmps_recursive(n, &input, cfg.rounds)?;
        let exact = summarize(&exact_outcome)?;
        let mc = dejmps_monte_carlo(n, &input, cfg.rounds, &mc_settings(cfg))?;
        let row = post_row("dejmps", label, &exact, &mc);
        let post_per_pair = row.er_global_per_pair.mean;
        res.rows.push(row);

        let pes_er = conv.pair_er(p_eff)?;
        let pes_note = if cfg.use_u_pre {
            format!("p' = {p_eff:.6}; pre-unitary variant reported in row pes_u_pre")
        } else {
            format!("p' = {p_eff:.6}")
        };
        res.rows
            .push(deterministic_row("pes_dd", label, pes_er, true, pes_note));

        let cal = calibrate_pes(p, cfg.pes_target_er, conv)?;
        let cal_er = conv.pair_er(cal.p_prime)?;
        res.rows.push(deterministic_row(
            "pes_calibrated",
            label,
            cal_er,
            true,
            format!(
                "calibrated p' = {:.6}, ln(p/p') = {:.6}, reachable by decoupling: {}",
                cal.p_prime, cal.log_ratio, cal.feasible
            ),
        ));

        let mut grid = Vec::new();
        for (side, state) in [("one_sided", input), ("two_sided", two_sided_pair(p)?)] {
            if side == "two_sided" && conv == Convention::Paper {
                continue;
            }
            for (gn, gr) in [(2usize, 1usize), (4, 2), (8, 3)] {
                let o = dejmps_recursive(gn, &state, gr)?;
                let ps = o.success_probability;
                grid.push(
                    json!({"noise": side, "n_pairs": gn, "rounds": gr, "success_probability": ps,
                    "er_global_per_pair": o.er_global()? / gn as f64}),
                );
                res.discrepancies.push(DiscrepancyEntry::numeric(
                    format!("post_success_grid_{side}_n{gn}_r{gr}"),
                    format!(
                        "DEJMPS success probability, {gn} pairs, {gr} rounds, noise on {}",
                        if side == "one_sided" {
                            "the sent qubit only"
                        } else {
                            "both qubits"
                        }
                    ),
                    PS_CLAIM_T1.0,
                    ps,
                    tol(PS_CLAIM_T1.1),
                    label,
                ));
            }
        }

        let d = &mut res.discrepancies;
        d.push(DiscrepancyEntry::numeric(
            "depolarizing_post_er_global",
            format!(
                "Post-distillation global E_R per pair, {n} pairs, {} rounds, Monte Carlo mean",
                cfg.rounds
            ),
            ER_CLAIM_T1.0,
            post_per_pair,
            tol(ER_CLAIM_T1.1),
            label,
        ));
        d.push(DiscrepancyEntry::numeric(
            "depolarizing_post_success",
            format!(
                "Post-distillation success probability, {n} pairs, {} rounds, exact tree",
                cfg.rounds
            ),
            PS_CLAIM_T1.0,
            exact.success_probability,
            tol(PS_CLAIM_T1.1),
            label,
        ));
        d.push(DiscrepancyEntry::numeric(
            "depolarizing_post_rate",
            "Post-distillation effective rate, success probability times success-branch E_R over pairs consumed",
            RATE_CLAIM_T1,
            exact.effective_rate,
            ROUNDING,
            label,
        ));
        if let Some(good) = exact.er_selected {
            d.push(DiscrepancyEntry::numeric(
                "depolarizing_good_branch_er",
                "E_R of the kept output on successful branches",
                GOOD_ER_CLAIM,
                good,
                5e-3,
                label,
            ));
        }
        d.push(DiscrepancyEntry::numeric(
            "depolarizing_pes_er",
            format!("Shaped per-pair E_R at the configured decoupling, p' = {p_eff:.4}"),
            PES_CLAIM_T1.0,
            pes_er,
            tol(PES_CLAIM_T1.1),
            label,
        ));
        d.push(DiscrepancyEntry::numeric(
            "depolarizing_pes_er_calibrated",
            "Shaped per-pair E_R after calibrating p' to the claimed value",
            PES_CLAIM_T1.0,
            cal_er,
            1e-9,
            label,
        ));
        d.push(DiscrepancyEntry::numeric(
            "calibrated_p_prime",
            "Noise level whose per-pair E_R equals 0.187, against the stated p' = 0.17",
            0.17,
            cal.p_prime,
            ROUNDING,
            label,
        ));
        d.push(DiscrepancyEntry::qualitative(
            "calibration_reachable",
            "Calibrated p' must not exceed p for a non-negative noise density; computed value is ln(p/p')",
            "p' <= p",
            cal.log_ratio,
            cal.feasible,
            label,
        ));
        let ratio = cal_er / post_per_pair;
        d.push(DiscrepancyEntry::numeric(
            "shaping_gain_ratio",
            "Calibrated shaped E_R per pair over post-distillation global E_R per pair",
            PES_CLAIM_T1.0 / ER_CLAIM_T1.0,
            ratio,
            ratio_tolerance(PES_CLAIM_T1, ER_CLAIM_T1),
            label,
        ));
        d.push(DiscrepancyEntry::qualitative(
            "pair_count",
            format!("Pairs per run: the comparison is described over 100 channel uses; the simulated tree uses {n}"),
            "100 channel uses",
            n as f64,
            n == 100,
            label,
        ));

        res.detail(
            format!("{conv}"),
            json!({
                "exact": exact,
                "monte_carlo": mc,
                "calibration": cal,
                "success_grid": grid,
                "pes_over_post_at_configured_dd": pes_er / post_per_pair,
                "calibrated_pes_over_post": ratio,
            }),
        );
    }
    Ok(())
}

pub(crate) fn table2(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> Result<()> {
    let gamma = cfg.gamma;
    let n = cfg.n_pairs;
    let damped = amplitude_damping(gamma)?.apply(&DensityMatrix::bell_phi_plus(), 1)?;
    let plain = er_two_qubit(&damped, &cfg.solver)?;

    let search = pre_rotation_search_ad(gamma, cfg.rotation_grid, cfg.tie_tolerance, &cfg.solver)?;
    let search_converged = search.grid.iter().all(|g| g.converged);
    res.rows.push(deterministic_row(
        "pes_pre_rotation",
        None,
        search.best_er,
        search_converged,
        format!(
            "best (theta, phi) = ({:.4}, {:.4}); {} of {} grid points within {:.1e} of the best",
            search.best_theta,
            search.best_phi,
            search.ties,
            search.grid.len(),
            search.tie_tolerance
        ),
    ));

    let gamma_dd = gamma * cfg.damping_compression;
    let compressed = er_two_qubit(
        &amplitude_damping(gamma_dd)?.apply(&DensityMatrix::bell_phi_plus(), 1)?,
        &cfg.solver,
    )?;
    res.rows.push(deterministic_row(
        "pes_dd",
        None,
        compressed.value,
        compressed.converged,
        format!("damping compressed to gamma' = {gamma_dd:.6}"),
    ));

    let twirled = BellDiagonalState::twirl(&damped)?;
    let exact_outcome = dejmps_recursive(n, &twirled, cfg.rounds)?;
    let exact = summarize(&exact_outcome)?;
    let mc = dejmps_monte_carlo(n, &twirled, cfg.rounds, &mc_settings(cfg))?;
    let row = post_row("dejmps_twirled", None, &exact, &mc);
    let post_per_pair = row.er_global_per_pair.mean;
    res.rows.push(row);

    let damping = damping_suppression(
        cfg.damping_gamma,
        cfg.damping_gamma * cfg.damping_compression,
        cfg.slices,
        cfg.slice_samples,
        &cfg.solver,
    )?;

    let d = &mut res.discrepancies;
    d.push(DiscrepancyEntry::numeric(
        "damping_post_er_global",
        format!("Post-distillation global E_R per pair after Bell twirl, gamma = {gamma}"),
        ER_CLAIM_T2.0,
        post_per_pair,
        tol(ER_CLAIM_T2.1),
        None,
    ));
    d.push(DiscrepancyEntry::numeric(
        "damping_post_success",
        "Post-distillation success probability after Bell twirl, exact tree",
        PS_CLAIM_T2.0,
        exact.success_probability,
        tol(PS_CLAIM_T2.1),
        None,
    ));
    d.push(DiscrepancyEntry::numeric(
        "damping_post_rate",
        "Post-distillation effective rate after Bell twirl",
        RATE_CLAIM_T2,
        exact.effective_rate,
        ROUNDING,
        None,
    ));
    d.push(DiscrepancyEntry::numeric(
        "damping_pes_er_compressed",
        format!("Shaped E_R with damping compressed by {}", cfg.damping_compression),
        PES_CLAIM_T2.0,
        compressed.value,
        tol(PES_CLAIM_T2.1),
        None,
    ));
    d.push(DiscrepancyEntry::numeric(
        "damping_pes_er_pre_rotation",
        "Best E_R over local pre-rotations of the sent qubit",
        PES_CLAIM_T2.0,
        search.best_er,
        tol(PES_CLAIM_T2.1),
        None,
    ));
    d.push(DiscrepancyEntry::qualitative(
        "damping_pre_rotation_gain",
        "E_R gain of the best pre-rotation over no rotation; a local unitary before the channel cannot beat the unrotated input here",
        "pre-rotation reduces the damping impact",
        search.best_er - plain.value,
        search.best_er - plain.value > cfg.tie_tolerance,
        None,
    ));
    d.push(DiscrepancyEntry::numeric(
        "damping_shaping_gain_ratio",
        "Compressed-damping E_R over post-distillation global E_R per pair",
        PES_CLAIM_T2.0 / ER_CLAIM_T2.0,
        compressed.value / post_per_pair,
        ratio_tolerance(PES_CLAIM_T2, ER_CLAIM_T2),
        None,
    ));
    d.push(DiscrepancyEntry::numeric(
        "damping_delta_er",
        format!(
            "E_R(shaped) - E_R(post) under time-sliced damping, gamma = {}, gamma' = {}",
            cfg.damping_gamma,
            cfg.damping_gamma * cfg.damping_compression
        ),
        DAMPING_DELTA_CLAIM,
        damping.delta,
        ROUNDING,
        None,
    ));

    res.detail("er_unrotated", &plain);
    res.detail("pre_rotation", &search);
    res.detail("twirled_input", twirled.coefficients());
    res.detail("exact", exact);
    res.detail("monte_carlo", mc);
    res.detail("damping_suppression", &damping);
    Ok(())
}

fn form_for(conv: Convention) -> TrajectoryForm {
    match conv {
        Convention::Paper => TrajectoryForm::Paper,
        Convention::Oracle => TrajectoryForm::Oracle,
    }
}

pub(crate) fn flow(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> Result<Vec<OutputFile>> {
    let shaped = effective_channel(&depolarizing(cfg.p)?, Some(&dd_config(cfg)?))?;
    let p_eff = 1.0 - channel_bell_fidelity(&shaped)?;
    let mut files = Vec::new();
    for conv in cfg.convention.conventions() {
        let form = form_for(conv);
        let (post, pes) = trajectory(cfg.p, p_eff, cfg.f0, cfg.t_end, cfg.step, form)?;
        let outcome = dejmps_recursive(cfg.n_pairs, &conv.pair_state(cfg.p)?, cfg.rounds)?;
        let mut landmarks = Vec::new();
        if let Some(g) = outcome.global_bell() {
            let (f, m) = plane_coordinates(&g);
            landmarks.push(Landmark {
                label: "post_global".into(),
                fidelity: f,
                er_bits: er_bell_diagonal(&g)?.value,
                mixedness: m,
            });
        }
        if let Some(sel) = outcome.selected.as_ref().and_then(|s| s.first()) {
            let (f, m) = plane_coordinates(sel);
            landmarks.push(Landmark {
                label: "success_subensemble".into(),
                fidelity: f,
                er_bits: er_bell_diagonal(sel)?.value,
                mixedness: m,
            });
        }
        let post_end = *post.samples.last().expect("non-empty trajectory");
        let pes_end = *pes.samples.last().expect("non-empty trajectory");
        landmarks.push(Landmark {
            label: "pes_endpoint".into(),
            fidelity: pes_end.fidelity,
            er_bits: pes_end.er_bits,
            mixedness: pes_end.mixedness,
        });

        let prefix = format!("flow_{conv}");
        let trajs = vec![("post".to_string(), post.clone()), ("pes".to_string(), pes.clone())];
        let produced = flow_files(&prefix, &trajs, &landmarks)?;

        let round_trip = parse_trajectory_csv(&produced[0].contents)? == post.samples
            && parse_trajectory_csv(&produced[1].contents)? == pes.samples
            && parse_landmarks_csv(&produced[2].contents)? == landmarks;
        res.checks.push(CheckOutcome {
            name: format!("flow_{conv}_csv_round_trip"),
            passed: round_trip,
            detail: "parsed CSV equals in-memory samples".into(),
        });
        res.checks.push(CheckOutcome {
            name: format!("flow_{conv}_starts_at_zero"),
            passed: post.samples[0].t == 0.0 && pes.samples[0].t == 0.0,
            detail: "first sample at t = 0".into(),
        });
        res.checks.push(CheckOutcome {
            name: format!("flow_{conv}_pes_endpoint_dominates"),
            passed: pes_end.er_bits >= post_end.er_bits,
            detail: format!(
                "E_R(pes end) = {:.6}, E_R(post end) = {:.6}",
                pes_end.er_bits, post_end.er_bits
            ),
        });

        for (label, _) in &trajs {
            res.trajectories.push(super::result::TrajectoryRecord {
                label: format!("{conv}_{label}"),
                file: format!("{prefix}_{label}.csv"),
                points: post.samples.len(),
            });
        }
        res.detail(
            format!("{conv}"),
            json!({
                "p_prime": p_eff,
                "delta_er": delta_er(cfg.p, p_eff, cfg.f0, cfg.t_end, form)?,
                "landmarks": landmarks,
            }),
        );
        files.extend(produced);
    }
    Ok(files)
}

#[derive(Serialize)]
struct SweepPoint {
    p: f64,
    p_prime: f64,
    post_success_probability: f64,
    post_er_global_per_pair: f64,
    post_effective_rate: f64,
    pes_er_per_pair: f64,
    hashing_rate: f64,
}

pub(crate) fn sweep(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> Result<Vec<OutputFile>> {
    let factor = match cfg.dd_noise_density {
        Some(g) => (-g / cfg.dd_frequency).exp(),
        None => dd_config(cfg)?.compression_factor(),
    };
    let mut files = Vec::new();
    for conv in cfg.convention.conventions() {
        let mut points = Vec::with_capacity(cfg.sweep_points);
        for k in 0..cfg.sweep_points {
            let p = cfg.sweep_min + (cfg.sweep_max - cfg.sweep_min) * k as f64 / (cfg.sweep_points - 1) as f64;
            let o = dejmps_recursive(cfg.n_pairs, &conv.pair_state(p)?, cfg.rounds)?;
            let s = summarize(&o)?;
            let p_prime = p * factor;
            points.push(SweepPoint {
                p,
                p_prime,
                post_success_probability: s.success_probability,
                post_er_global_per_pair: s.er_global_per_pair,
                post_effective_rate: s.effective_rate,
                pes_er_per_pair: conv.pair_er(p_prime)?,
                hashing_rate: hashing_rate(p)?.value,
            });
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for pt in &points {
            w.serialize(pt).map_err(|e| Error::Serialize(format!("sweep: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serialize(format!("sweep: {e}")))?;
        files.push(OutputFile {
            name: format!("sweep_{conv}.csv"),
            contents: String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))?,
        });
        res.detail(format!("{conv}"), &points);
    }
    res.detail("compression_factor", factor);
    Ok(files)
}

pub(crate) fn er_single(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> Result<()> {
    let x = cfg.state_param;
    let rho = match cfg.state {
        StateKind::WernerPaper => DensityMatrix::werner_paper(x)?,
        StateKind::WernerChannel => DensityMatrix::werner_from_channel(x)?,
        StateKind::Bell => BellDiagonalState::new(cfg.state_coefficients)?.to_density(),
        StateKind::Damping => amplitude_damping(x)?.apply(&DensityMatrix::bell_phi_plus(), 1)?,
    };
    let best = er_two_qubit(&rho, &cfg.solver)?;
    res.rows.push(deterministic_row(
        "state",
        None,
        best.value,
        best.converged,
        format!("{:?}", best.kind),
    ));
    res.detail("er", &best);
    res.detail("negativity", negativity(&rho)?);
    res.detail("von_neumann_entropy", von_neumann_entropy(&rho));
    if let Ok(bd) = BellDiagonalState::from_density(&rho, 1e-10) {
        let numeric = er_numeric(&rho, &cfg.solver)?;
        res.detail("er_numeric", numeric.value);
        res.detail("numeric_minus_closed_form", numeric.value - best.value);
        res.detail("bell_coefficients", bd.coefficients());
    }
    Ok(())
}

fn check(res: &mut ExperimentResult, name: &str, passed: bool, detail: String) {
    res.checks.push(CheckOutcome {
        name: name.to_string(),
        passed,
        detail,
    });
}

/// Independent-oracle suite; every check is recorded, none short-circuits.
pub(crate) fn selfcheck(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> Result<()> {
    // Numeric minimizer against the Bell-diagonal closed form.
    let mut worst: f64 = 0.0;
    for k in 0..11 {
        let f = 0.55 + 0.04 * k as f64;
        let rho = DensityMatrix::werner_paper(f)?;
        let closed = er_bell_diagonal(&BellDiagonalState::from_density(&rho, 1e-10)?)?.value;
        worst = worst.max((er_numeric(&rho, &cfg.solver)?.value - closed).abs());
    }
    check(
        res,
        "numeric_vs_closed_form_werner",
        worst <= 5e-3,
        format!("max |gap| = {worst:.3e}"),
    );

    let bridge_gap = (er_werner(0.7, WernerBridge::OnePlusThreeFOverFour)?
        - er_bell_diagonal(&BellDiagonalState::werner_paper(0.7)?)?.value)
        .abs();
    check(
        res,
        "werner_bridge_exact",
        bridge_gap < 1e-12,
        format!("|gap| = {bridge_gap:.3e}"),
    );

    let phi = DensityMatrix::bell_phi_plus();
    let e_phi = er_numeric(&phi, &cfg.solver)?.value;
    check(
        res,
        "numeric_bell_state",
        (e_phi - 1.0).abs() <= 5e-3,
        format!("E_R = {e_phi:.6}"),
    );

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = (0.8f64.sqrt(), 0.2f64.sqrt());
    let psi: Vec<C64> = [a * h, a * h, 0.0, b].iter().map(|&x| C64::new(x, 0.0)).collect();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let psi: Vec<C64> = psi.iter().map(|z| z / norm).collect();
    let pure = DensityMatrix::pure(&psi, vec![2, 2])?;
    let s_a = von_neumann_entropy(&pure.partial_trace(&[0])?);
    let e_pure = er_pure(&psi, [2, 2])?.value;
    check(
        res,
        "pure_state_entropy",
        (e_pure - s_a).abs() < 1e-12,
        format!("|gap| = {:.3e}", (e_pure - s_a).abs()),
    );

    // Rate against central differences of E_R(F0 e^{-pt}).
    let mut worst_rel: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            let f = 0.55 + 0.04 * i as f64;
            let p = 0.05 + 0.05 * j as f64;
            let er_at = |t: f64| {
                let ft = f * (-p * t).exp();
                werner_er(ft, TrajectoryForm::Paper).unwrap_or(f64::NAN)
            };
            let fd = oracle::central_difference(er_at, 0.0, 1e-5);
            let exact = er_production_rate(f, p)?;
            worst_rel = worst_rel.max(((fd - exact) / exact).abs());
        }
    }
    check(
        res,
        "rate_vs_central_difference",
        worst_rel <= 1e-6,
        format!("max rel gap = {worst_rel:.3e}"),
    );

    let rk = oracle::rk4_decay(0.9, 0.3, 2.0, 400);
    let closed = fidelity_decay(0.9, 0.3, 2.0)?;
    check(
        res,
        "fidelity_decay_vs_rk4",
        (rk - closed).abs() < 1e-10,
        format!("|gap| = {:.3e}", (rk - closed).abs()),
    );

    let quad = oracle::delta_er_by_quadrature(0.3, 0.1, 0.95, 1.0);
    let direct = delta_er(0.3, 0.1, 0.95, 1.0, TrajectoryForm::Paper)?.value;
    check(
        res,
        "delta_er_vs_quadrature",
        (quad - direct).abs() < 1e-8,
        format!("|gap| = {:.3e}", (quad - direct).abs()),
    );

    // One distillation step against the textbook recurrence.
    let mut worst_step: f64 = 0.0;
    for f in [0.6, 0.7, 0.8, 0.9] {
        let s = BellDiagonalState::werner_paper(f)?;
        let (ps, kept) = oracle::recurrence_step(&s)?;
        let sim = dejmps_branch_map(&s, &s)?;
        let sel = sim.selected.as_ref().and_then(|v| v.first()).copied();
        let gap_c = sel
            .map(|x| {
                x.coefficients()
                    .iter()
                    .zip(kept.coefficients())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .unwrap_or(f64::INFINITY);
        worst_step = worst_step.max((sim.success_probability - ps).abs()).max(gap_c);
    }
    check(
        res,
        "dejmps_vs_recurrence",
        worst_step < 1e-12,
        format!("max |gap| = {worst_step:.3e}"),
    );

    // Monte Carlo against the exact tree within three standard errors.
    for f in [0.7, 0.8, 0.9] {
        let s = BellDiagonalState::werner_paper(f)?;
        let exact = dejmps_recursive(cfg.n_pairs, &s, cfg.rounds)?;
        let mc = dejmps_monte_carlo(cfg.n_pairs, &s, cfg.rounds, &mc_settings(cfg))?;
        let ps_ok = (mc.success_probability.mean - exact.success_probability).abs()
            <= (3.0 * mc.success_probability.std_error).max(1e-12);
        let fid_ok = match (mc.selected_fidelity, exact.selected_fidelity()) {
            (Some(m), Some(e)) => (m.mean - e).abs() <= (3.0 * m.std_error).max(1e-12),
            (None, None) => true,
            _ => false,
        };
        check(
            res,
            &format!("monte_carlo_vs_exact_f{f}"),
            ps_ok && fid_ok,
            format!(
                "p_s {:.5} vs {:.5} (se {:.2e})",
                mc.success_probability.mean, exact.success_probability, mc.success_probability.std_error
            ),
        );
    }

    let threshold = depolarizing_eb_threshold(1e-12)?;
    check(
        res,
        "eb_threshold_half",
        (threshold - 0.5).abs() < 1e-9,
        format!("threshold = {threshold:.12}"),
    );

    Ok(())
}
