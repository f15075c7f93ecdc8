//! Recurrence distillation on Bell-diagonal pairs, simulated on the full
//! four-qubit register.
//!
//! One step: Alice applies `Rx(π/2)` and Bob `Rx(−π/2)` to both of their
//! qubits, each side runs a CNOT from the source pair to the target pair, both
//! target qubits are measured in Z, and the source pair is kept when the two
//! outcomes agree. Failed branches keep their exact post-measurement source
//! state.

use std::collections::HashMap;
use std::sync::RwLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::entanglement::er_bell_diagonal;
use crate::error::{Error, Result};
use crate::qstate::{gates, BellDiagonalState, ComplexMatrix, DensityMatrix};

/// Largest Bell-basis coherence tolerated when reading a branch state back as
/// Bell-diagonal.
const COHERENCE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub probability: f64,
    /// True when every recurrence step on the path kept its pair.
    pub success: bool,
    /// Output pairs of this branch, a product state.
    pub pairs: Vec<BellDiagonalState>,
}

#[derive(Clone, Debug)]
pub struct DistillationOutcome {
    pub branches: Vec<Branch>,
    pub success_probability: f64,
    /// Output pairs of the all-success branch, `None` when that branch has zero weight.
    pub selected: Option<Vec<BellDiagonalState>>,
    /// Probability mixture over all branches; materialized for up to two output pairs.
    pub global_state: Option<DensityMatrix>,
    pub pairs_consumed: usize,
}

fn product_density(pairs: &[BellDiagonalState]) -> DensityMatrix {
    pairs
        .iter()
        .map(|p| p.to_density())
        .reduce(|a, b| a.tensor(&b))
        .expect("at least one pair")
}

fn total_er(pairs: &[BellDiagonalState]) -> Result<f64> {
    pairs.iter().map(|p| er_bell_diagonal(p).map(|r| r.value)).sum()
}

impl DistillationOutcome {
    fn from_branches(branches: Vec<Branch>, pairs_consumed: usize) -> Result<Self> {
        let success_probability: f64 = branches.iter().filter(|b| b.success).map(|b| b.probability).sum();
        let selected = branches
            .iter()
            .find(|b| b.success && b.probability > 0.0)
            .map(|b| b.pairs.clone());
        let mut out = Self {
            branches,
            success_probability,
            selected,
            global_state: None,
            pairs_consumed,
        };
        if out.output_pairs() <= 2 {
            out.global_state = Some(out.assemble_global()?);
        }
        Ok(out)
    }

    pub fn output_pairs(&self) -> usize {
        self.branches.first().map_or(0, |b| b.pairs.len())
    }

    /// Explicit branch mixture, for up to four output pairs.
    pub fn assemble_global(&self) -> Result<DensityMatrix> {
        if self.output_pairs() > 4 {
            return Err(Error::Unsupported(format!(
                "materializing {} output pairs",
                self.output_pairs()
            )));
        }
        let states: Vec<DensityMatrix> = self.branches.iter().map(|b| product_density(&b.pairs)).collect();
        let parts: Vec<(f64, &DensityMatrix)> = self
            .branches
            .iter()
            .zip(&states)
            .map(|(b, s)| (b.probability, s))
            .collect();
        DensityMatrix::mixture(&parts)
    }

    /// Global state as Bell weights, when a single pair is output.
    pub fn global_bell(&self) -> Option<BellDiagonalState> {
        self.mixture_of(|_| true)
    }

    /// Normalized mixture of the failed branches, when a single pair is output.
    pub fn trash_bell(&self) -> Option<BellDiagonalState> {
        self.mixture_of(|b| !b.success)
    }

    fn mixture_of(&self, keep: impl Fn(&Branch) -> bool) -> Option<BellDiagonalState> {
        if self.output_pairs() != 1 {
            return None;
        }
        let parts: Vec<(f64, BellDiagonalState)> = self
            .branches
            .iter()
            .filter(|b| keep(b) && b.probability > 0.0)
            .map(|b| (b.probability, b.pairs[0]))
            .collect();
        if parts.is_empty() {
            return None;
        }
        BellDiagonalState::mixture(&parts).ok()
    }

    /// E_R of the global output: exact for one output pair, otherwise the
    /// convexity-plus-subadditivity bound `Σ_b p_b Σ_pairs E_R`.
    pub fn er_global(&self) -> Result<f64> {
        if let Some(g) = self.global_bell() {
            return Ok(er_bell_diagonal(&g)?.value);
        }
        self.er_branch_average()
    }

    /// `Σ_b p_b E_R(branch)`, the convexity bound on `er_global`.
    pub fn er_branch_average(&self) -> Result<f64> {
        let mut acc = 0.0;
        for b in &self.branches {
            acc += b.probability * total_er(&b.pairs)?;
        }
        Ok(acc)
    }

    pub fn er_selected(&self) -> Result<Option<f64>> {
        self.selected.as_deref().map(total_er).transpose()
    }

    pub fn er_trash(&self) -> Result<Option<f64>> {
        self.trash_bell()
            .map(|t| er_bell_diagonal(&t).map(|r| r.value))
            .transpose()
    }

    /// Single-pair global E_R when failed branches are replaced by `I/4`.
    pub fn er_global_trash_mixed(&self) -> Result<Option<f64>> {
        let Some(good) = self.selected.as_ref().filter(|s| s.len() == 1) else {
            return Ok(None);
        };
        let ps = self.success_probability;
        let mix = BellDiagonalState::mixture(&[(ps, good[0]), (1.0 - ps, BellDiagonalState::new([0.25; 4])?)])?;
        Ok(Some(er_bell_diagonal(&mix)?.value))
    }

    pub fn selected_fidelity(&self) -> Option<f64> {
        self.selected.as_ref().map(|s| mean_fidelity(s))
    }
}

fn mean_fidelity(pairs: &[BellDiagonalState]) -> f64 {
    pairs.iter().map(|p| p.fidelity()).sum::<f64>() / pairs.len() as f64
}

struct Circuit {
    unitary: ComplexMatrix,
    keep: ComplexMatrix,
    discard: ComplexMatrix,
}

/// Register order `(A1, B1, A2, B2)`: pair 1 is the source, pair 2 the target.
fn circuit() -> Circuit {
    let half = std::f64::consts::FRAC_PI_2;
    let (ra, rb) = (gates::rx(half), gates::rx(-half));
    let local = ra.kron(&rb).kron(&ra).kron(&rb);
    let cnots = &gates::embed_pair(&gates::cnot(), 0, 2, 4) * &gates::embed_pair(&gates::cnot(), 1, 3, 4);
    let unitary = &cnots * &local;
    let mut keep = vec![0.0; 16];
    let mut discard = vec![0.0; 16];
    for (idx, (k, d)) in keep.iter_mut().zip(discard.iter_mut()).enumerate() {
        let (a2, b2) = ((idx >> 1) & 1, idx & 1);
        if a2 == b2 {
            *k = 1.0;
        } else {
            *d = 1.0;
        }
    }
    Circuit {
        unitary,
        keep: ComplexMatrix::diag(&keep),
        discard: ComplexMatrix::diag(&discard),
    }
}

/// `[(p_keep, state), (p_discard, state)]` for one recurrence step. A branch
/// with zero probability carries the maximally mixed pair.
fn step(source: &BellDiagonalState, target: &BellDiagonalState, c: &Circuit) -> Result<[(f64, BellDiagonalState); 2]> {
    let rho = source.to_density().tensor(&target.to_density());
    let rotated = c.unitary.conjugate(rho.matrix());
    let mut out = [(0.0, BellDiagonalState::new([0.25; 4])?); 2];
    for (slot, proj) in out.iter_mut().zip([&c.keep, &c.discard]) {
        let branch = &(proj * &rotated) * proj;
        let prob = branch.trace().re.max(0.0);
        if prob <= 1e-15 {
            *slot = (0.0, slot.1);
            continue;
        }
        let state = DensityMatrix::from_numeric(branch, vec![2, 2, 2, 2])?.partial_trace(&[0, 1])?;
        *slot = (prob, BellDiagonalState::from_density(&state, COHERENCE_TOL)?);
    }
    let total = out[0].0 + out[1].0;
    out[0].0 /= total;
    out[1].0 /= total;
    Ok(out)
}

/// One recurrence step on two pairs, as a two-branch outcome.
pub fn dejmps_branch_map(source: &BellDiagonalState, target: &BellDiagonalState) -> Result<DistillationOutcome> {
    let [(pk, sk), (pd, sd)] = step(source, target, &circuit())?;
    DistillationOutcome::from_branches(
        vec![
            Branch {
                probability: pk,
                success: true,
                pairs: vec![sk],
            },
            Branch {
                probability: pd,
                success: false,
                pairs: vec![sd],
            },
        ],
        2,
    )
}

fn validate_tree(n_pairs: usize, rounds: usize) -> Result<()> {
    if n_pairs == 0 || !n_pairs.is_power_of_two() {
        return Err(Error::Config(format!("pair count {n_pairs} must be a power of two")));
    }
    if rounds > n_pairs.trailing_zeros() as usize {
        return Err(Error::Config(format!(
            "{rounds} rounds need {} pairs, have {n_pairs}",
            1usize << rounds
        )));
    }
    Ok(())
}

type StepKey = ([u64; 4], [u64; 4]);

fn key(a: &BellDiagonalState, b: &BellDiagonalState) -> StepKey {
    (a.coefficients().map(f64::to_bits), b.coefficients().map(f64::to_bits))
}

/// Exact branch tree: `rounds` levels of pairwise recurrence on `n_pairs`
/// copies of `input`. Every step runs on every branch, including after an
/// earlier failure.
pub fn dejmps_recursive(n_pairs: usize, input: &BellDiagonalState, rounds: usize) -> Result<DistillationOutcome> {
    validate_tree(n_pairs, rounds)?;
    let c = circuit();
    let mut memo: HashMap<StepKey, [(f64, BellDiagonalState); 2]> = HashMap::new();
    let mut branches = vec![Branch {
        probability: 1.0,
        success: true,
        pairs: vec![*input; n_pairs],
    }];
    for _ in 0..rounds {
        let mut next = Vec::new();
        for b in &branches {
            let mut partial = vec![(b.probability, b.success, Vec::new())];
            for chunk in b.pairs.chunks(2) {
                let k = key(&chunk[0], &chunk[1]);
                let outcomes = match memo.get(&k) {
                    Some(o) => *o,
                    None => {
                        let o = step(&chunk[0], &chunk[1], &c)?;
                        memo.insert(k, o);
                        o
                    }
                };
                let mut grown = Vec::with_capacity(partial.len() * 2);
                for (p, ok, pairs) in &partial {
                    for (i, (q, s)) in outcomes.iter().enumerate() {
                        if *q == 0.0 {
                            continue;
                        }
                        let mut pairs = pairs.clone();
                        pairs.push(*s);
                        grown.push((p * q, *ok && i == 0, pairs));
                    }
                }
                partial = grown;
            }
            next.extend(partial.into_iter().map(|(probability, success, pairs)| Branch {
                probability,
                success,
                pairs,
            }));
        }
        branches = next;
    }
    DistillationOutcome::from_branches(branches, n_pairs)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std: f64,
    pub std_error: f64,
}

impl Estimate {
    fn from_samples(xs: impl Iterator<Item = f64> + Clone) -> Option<Self> {
        let n = xs.clone().count();
        if n == 0 {
            return None;
        }
        let mean = xs.clone().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Some(Self {
            mean,
            std: var.sqrt(),
            std_error: (var / n as f64).sqrt(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct MonteCarloSettings {
    pub runs: usize,
    pub master_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Contiguous batches used for the spread of pooled estimates.
    pub batches: usize,
}

impl MonteCarloSettings {
    pub fn new(runs: usize, master_seed: u64) -> Self {
        Self {
            runs,
            master_seed,
            workers: None,
            batches: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloStats {
    pub runs: usize,
    pub successes: usize,
    pub pairs_consumed: usize,
    pub success_probability: Estimate,
    /// Success fraction with the spread taken over batch estimates, comparable
    /// to the spread of `global_er`.
    pub success_probability_batches: Estimate,
    /// Mean fidelity of the output pairs over successful runs.
    pub selected_fidelity: Option<Estimate>,
    /// Mean fidelity of the output pairs over all runs.
    pub output_fidelity: Estimate,
    /// E_R of the pooled success ensemble.
    pub selected_er: Option<f64>,
    /// E_R of the pooled global ensemble; the spread comes from batch estimates.
    pub global_er: Estimate,
    /// Pooled global ensemble with failed runs replaced by `I/4`.
    pub global_er_trash_mixed: Option<f64>,
}

struct RunRecord {
    success: bool,
    pairs: Vec<BellDiagonalState>,
}

/// Stream `run_index` of the ChaCha8 generator seeded with `master_seed`.
pub fn run_rng(master_seed: u64, run_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index);
    rng
}

/// Step results shared across runs; `step` is pure, so lookup order cannot
/// change any value.
struct StepCache {
    circuit: Circuit,
    map: RwLock<HashMap<StepKey, [(f64, BellDiagonalState); 2]>>,
}

impl StepCache {
    fn new() -> Self {
        Self {
            circuit: circuit(),
            map: RwLock::new(HashMap::new()),
        }
    }

    fn get(&self, a: &BellDiagonalState, b: &BellDiagonalState) -> Result<[(f64, BellDiagonalState); 2]> {
        let k = key(a, b);
        if let Some(o) = self.map.read().expect("cache lock").get(&k) {
            return Ok(*o);
        }
        let o = step(a, b, &self.circuit)?;
        self.map.write().expect("cache lock").insert(k, o);
        Ok(o)
    }
}

fn sample_run(
    n_pairs: usize,
    input: &BellDiagonalState,
    rounds: usize,
    cache: &StepCache,
    rng: &mut ChaCha8Rng,
) -> Result<RunRecord> {
    let mut pairs = vec![*input; n_pairs];
    let mut success = true;
    for _ in 0..rounds {
        let mut next = Vec::with_capacity(pairs.len() / 2);
        for chunk in pairs.chunks(2) {
            let [(pk, sk), (_, sd)] = cache.get(&chunk[0], &chunk[1])?;
            if rng.gen::<f64>() < pk {
                next.push(sk);
            } else {
                success = false;
                next.push(sd);
            }
        }
        pairs = next;
    }
    Ok(RunRecord { success, pairs })
}

/// Pooled E_R of a set of runs: exact closed form on the averaged Bell weights
/// for one output pair, otherwise the per-run average bound.
fn pooled_er(records: &[&RunRecord]) -> Result<Option<f64>> {
    if records.is_empty() {
        return Ok(None);
    }
    if records[0].pairs.len() == 1 {
        let w = 1.0 / records.len() as f64;
        let parts: Vec<(f64, BellDiagonalState)> = records.iter().map(|r| (w, r.pairs[0])).collect();
        return Ok(Some(er_bell_diagonal(&BellDiagonalState::mixture(&parts)?)?.value));
    }
    let mut acc = 0.0;
    for r in records {
        acc += total_er(&r.pairs)?;
    }
    Ok(Some(acc / records.len() as f64))
}

/// Samples the branch tree run by run. Run `i` draws from stream `i` of the
/// master-seeded generator; records are reduced in run order, so the result
/// does not depend on the worker count.
pub fn dejmps_monte_carlo(
    n_pairs: usize,
    input: &BellDiagonalState,
    rounds: usize,
    settings: &MonteCarloSettings,
) -> Result<MonteCarloStats> {
    validate_tree(n_pairs, rounds)?;
    if settings.runs == 0 {
        return Err(Error::Config("run count must be >= 1".into()));
    }
    let cache = StepCache::new();
    let work = || -> Result<Vec<RunRecord>> {
        (0..settings.runs as u64)
            .into_par_iter()
            .map(|i| sample_run(n_pairs, input, rounds, &cache, &mut run_rng(settings.master_seed, i)))
            .collect()
    };
    let records = match settings.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let n = records.len();
    let successes = records.iter().filter(|r| r.success).count();
    let success_probability =
        Estimate::from_samples(records.iter().map(|r| f64::from(u8::from(r.success)))).expect("at least one run");
    let selected_fidelity =
        Estimate::from_samples(records.iter().filter(|r| r.success).map(|r| mean_fidelity(&r.pairs)));
    let output_fidelity =
        Estimate::from_samples(records.iter().map(|r| mean_fidelity(&r.pairs))).expect("at least one run");

    let all: Vec<&RunRecord> = records.iter().collect();
    let good: Vec<&RunRecord> = records.iter().filter(|r| r.success).collect();
    let selected_er = pooled_er(&good)?;
    let global_mean = pooled_er(&all)?.expect("at least one run");

    let batches = settings.batches.clamp(1, n);
    let size = n.div_ceil(batches);
    let mut batch_values = Vec::new();
    let mut batch_success = Vec::new();
    for chunk in all.chunks(size) {
        batch_values.push(pooled_er(chunk)?.expect("non-empty batch"));
        batch_success.push(chunk.iter().filter(|r| r.success).count() as f64 / chunk.len() as f64);
    }
    let success_spread = Estimate::from_samples(batch_success.iter().copied()).expect("non-empty");
    let spread = Estimate::from_samples(batch_values.iter().copied()).expect("non-empty");
    let global_er = Estimate {
        mean: global_mean,
        std: spread.std,
        std_error: spread.std_error,
    };

    let global_er_trash_mixed = match good.first() {
        Some(r) if r.pairs.len() == 1 => {
            let ps = successes as f64 / n as f64;
            let w = ps / good.len() as f64;
            let mut parts: Vec<(f64, BellDiagonalState)> = good.iter().map(|r| (w, r.pairs[0])).collect();
            parts.push((1.0 - ps, BellDiagonalState::new([0.25; 4])?));
            Some(er_bell_diagonal(&BellDiagonalState::mixture(&parts)?)?.value)
        }
        _ => None,
    };

    Ok(MonteCarloStats {
        runs: n,
        successes,
        pairs_consumed: n_pairs,
        success_probability,
        success_probability_batches: Estimate {
            mean: success_probability.mean,
            std: success_spread.std,
            std_error: success_spread.std_error,
        },
        selected_fidelity,
        output_fidelity,
        selected_er,
        global_er,
        global_er_trash_mixed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook recurrence with weights (A, B, C, D) on (Φ+, Ψ−, Ψ+, Φ−).
    fn recurrence(s: &BellDiagonalState) -> (f64, [f64; 4]) {
        let [a, c, b, d] = s.coefficients();
        let n = (a + b).powi(2) + (c + d).powi(2);
        let (a2, b2, c2, d2) = (
            (a * a + b * b) / n,
            2.0 * c * d / n,
            (c * c + d * d) / n,
            2.0 * a * b / n,
        );
        (n, [a2, c2, b2, d2])
    }

    #[test]
    fn simulation_matches_recurrence() {
        for coeffs in [
            [0.8, 0.2 / 3.0, 0.2 / 3.0, 0.2 / 3.0],
            [0.7, 0.1, 0.15, 0.05],
            [0.6, 0.05, 0.3, 0.05],
            [0.9, 0.0, 0.0, 0.1],
        ] {
            let s = BellDiagonalState::new(coeffs).unwrap();
            let out = dejmps_branch_map(&s, &s).unwrap();
            let (n, expect) = recurrence(&s);
            assert!((out.success_probability - n).abs() < 1e-12, "{coeffs:?}");
            let got = out.selected.unwrap()[0].coefficients();
            for k in 0..4 {
                assert!((got[k] - expect[k]).abs() < 1e-12, "{coeffs:?}: {got:?} vs {expect:?}");
            }
        }
    }

    #[test]
    fn perfect_pairs_stay_perfect() {
        let out = dejmps_branch_map(&BellDiagonalState::perfect(), &BellDiagonalState::perfect()).unwrap();
        assert!((out.success_probability - 1.0).abs() < 1e-12);
        assert!((out.selected_fidelity().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn improves_above_threshold_and_stalls_at_half() {
        let w = BellDiagonalState::werner_paper(0.8).unwrap();
        let out = dejmps_branch_map(&w, &w).unwrap();
        assert!(out.selected_fidelity().unwrap() > w.fidelity());
        assert!(out.success_probability > 0.0 && out.success_probability < 1.0);
        // Bell fidelity exactly 1/2 with uniform remaining weights is a fixed point.
        let half = BellDiagonalState::werner_channel(0.5).unwrap();
        let out = dejmps_branch_map(&half, &half).unwrap();
        assert!((out.selected_fidelity().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn branch_invariants() {
        let w = BellDiagonalState::werner_channel(0.2).unwrap();
        let out = dejmps_recursive(4, &w, 2).unwrap();
        let total: f64 = out.branches.iter().map(|b| b.probability).sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert_eq!(out.branches.len(), 8);
        assert_eq!(out.branches.iter().filter(|b| b.success).count(), 1);
        let g = out.global_state.as_ref().unwrap();
        assert!(
            g.matrix()
                .max_abs_diff(out.global_bell().unwrap().to_density().matrix())
                < 1e-10
        );
        assert!(out.er_global().unwrap() <= out.er_branch_average().unwrap() + 1e-12);
    }

    #[test]
    fn zero_rounds_is_the_input() {
        let w = BellDiagonalState::werner_paper(0.8).unwrap();
        let out = dejmps_recursive(2, &w, 0).unwrap();
        assert_eq!(out.success_probability, 1.0);
        let g = out.global_state.unwrap();
        let expect = w.to_density().tensor(&w.to_density());
        assert!(g.matrix().max_abs_diff(expect.matrix()) < 1e-12);
    }

    #[test]
    fn rejects_bad_trees() {
        let w = BellDiagonalState::perfect();
        assert!(dejmps_recursive(3, &w, 1).is_err());
        assert!(dejmps_recursive(4, &w, 3).is_err());
        assert!(dejmps_recursive(0, &w, 0).is_err());
        assert!(dejmps_monte_carlo(4, &w, 2, &MonteCarloSettings::new(0, 1)).is_err());
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let w = BellDiagonalState::werner_channel(0.2).unwrap();
        let s = MonteCarloSettings::new(300, 42);
        let a = dejmps_monte_carlo(4, &w, 2, &s).unwrap();
        let b = dejmps_monte_carlo(
            4,
            &w,
            2,
            &MonteCarloSettings {
                workers: Some(1),
                ..s.clone()
            },
        )
        .unwrap();
        let c = dejmps_monte_carlo(4, &w, 2, &MonteCarloSettings { workers: Some(8), ..s }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}
