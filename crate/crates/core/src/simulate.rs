//! Finite-size Monte Carlo for two spherical systems with correlated
//! disorder.
//!
//! Disorder is built from dense i.i.d. Gaussian coefficient tensors, one
//! shared and two private per interaction degree, combined as
//! `sqrt(t) shared + sqrt(1-t) private_j` so the cross-covariance of the
//! two energy processes is `t N xi(R)` exactly. Sampling is a global-move
//! Metropolis walk on the sphere with step size adapted during burn-in.
//! Everything is deterministic in the seeds.

use rand::Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256StarStar;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mixture::MixtureSpec;
use crate::par::map_indices;

/// Default tail thresholds reported alongside each overlap histogram.
pub const DEFAULT_EPS: [f64; 3] = [0.1, 0.2, 0.3];
/// Overlap histogram bin width on `[-1, 1]`.
pub const BIN_WIDTH: f64 = 0.02;
pub const N_BINS: usize = 100;

const THIN: usize = 5;
/// Fraction of sweeps spent on burn-in with step-size adaptation.
const BURN_FRACTION: f64 = 0.2;
const ADAPT_WINDOW: usize = 50;
const TARGET_ACCEPT: (f64, f64) = (0.3, 0.6);

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut s = base ^ salt.wrapping_mul(0xd6e8_feb8_6659_fd93);
    splitmix64(&mut s)
}

/// Size limits for the dense coefficient tensors.
#[derive(Debug, Clone, Copy)]
pub struct DisorderBudget {
    pub max_p: u32,
    pub max_n: usize,
}

impl Default for DisorderBudget {
    fn default() -> Self {
        DisorderBudget { max_p: 2, max_n: 32 }
    }
}

/// Which of the two coupled systems an operation addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum System {
    One,
    Two,
}

#[derive(Debug, Clone)]
struct TermTensors {
    p: u32,
    beta: f64,
    /// `N^{-(2p-1)/2}` normalization.
    scale: f64,
    g1: Vec<f64>,
    g2: Vec<f64>,
}

/// Entry-level moment statistics of the combined tensors, recorded at
/// build time. `worst_sigma` is the largest z-score among the
/// mean-square-one and cross-correlation-t checks over all degrees.
#[derive(Debug, Clone, Serialize)]
pub struct CovarianceSelfTest {
    pub rows: Vec<SelfTestRow>,
    pub worst_sigma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfTestRow {
    pub p: u32,
    pub entries: usize,
    pub mean_sq_1: f64,
    pub mean_sq_2: f64,
    pub cross_mean: f64,
}

impl CovarianceSelfTest {
    pub fn passes(&self, n_sigma: f64) -> bool {
        self.worst_sigma <= n_sigma
    }
}

/// One realization of the correlated disorder pair.
#[derive(Debug, Clone)]
pub struct DisorderRealization {
    n: usize,
    t: f64,
    seed: u64,
    h: f64,
    terms: Vec<TermTensors>,
    pub self_test: CovarianceSelfTest,
}

impl DisorderRealization {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Build a disorder realization under the default tensor budget.
pub fn build_disorder(spec: &MixtureSpec, n: usize, t: f64, seed: u64) -> Result<DisorderRealization> {
    build_disorder_with_budget(spec, n, t, seed, &DisorderBudget::default())
}

pub fn build_disorder_with_budget(
    spec: &MixtureSpec,
    n: usize,
    t: f64,
    seed: u64,
    budget: &DisorderBudget,
) -> Result<DisorderRealization> {
    spec.validated()?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need N >= 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("t = {t} outside [0, 1]")));
    }
    if n > budget.max_n {
        return Err(Error::Budget(format!(
            "N = {n} exceeds the tensor budget (max {})",
            budget.max_n
        )));
    }
    for term in spec.terms() {
        if term.p > budget.max_p && term.beta_sq != 0.0 {
            return Err(Error::Budget(format!(
                "degree p = {} exceeds the tensor budget (max {})",
                term.p, budget.max_p
            )));
        }
    }
    let mut state = seed;
    for salt in [n as u64, t.to_bits(), spec.digest()] {
        state = derive_seed(state, salt);
    }
    let mut rng = Xoshiro256StarStar::seed_from_u64(state);
    let st = t.sqrt();
    let sp = (1.0 - t).sqrt();
    let mut terms = Vec::new();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for term in spec.terms() {
        if term.beta_sq == 0.0 {
            continue;
        }
        let entries = n.pow(2 * term.p);
        let mut g1 = Vec::with_capacity(entries);
        let mut g2 = Vec::with_capacity(entries);
        let mut sq1 = 0.0;
        let mut sq2 = 0.0;
        let mut cross = 0.0;
        for _ in 0..entries {
            let shared: f64 = rng.sample(StandardNormal);
            let p1: f64 = rng.sample(StandardNormal);
            let p2: f64 = rng.sample(StandardNormal);
            let a = st * shared + sp * p1;
            let b = st * shared + sp * p2;
            sq1 += a * a;
            sq2 += b * b;
            cross += a * b;
            g1.push(a);
            g2.push(b);
        }
        let m = entries as f64;
        let row = SelfTestRow {
            p: term.p,
            entries,
            mean_sq_1: sq1 / m,
            mean_sq_2: sq2 / m,
            cross_mean: cross / m,
        };
        let z_sq1 = (row.mean_sq_1 - 1.0).abs() / (2.0 / m).sqrt();
        let z_sq2 = (row.mean_sq_2 - 1.0).abs() / (2.0 / m).sqrt();
        let z_cross = (row.cross_mean - t).abs() / ((1.0 + t * t) / m).sqrt();
        worst = worst.max(z_sq1).max(z_sq2).max(z_cross);
        rows.push(row);
        terms.push(TermTensors {
            p: term.p,
            beta: term.beta_sq.sqrt(),
            scale: (n as f64).powf(-((2 * term.p) as f64 - 1.0) / 2.0),
            g1,
            g2,
        });
    }
    if worst > 6.0 {
        return Err(Error::Numerical(format!(
            "disorder self-test failed catastrophically ({worst:.1} sigma); \
             this indicates a generator bug"
        )));
    }
    Ok(DisorderRealization {
        n,
        t,
        seed,
        h: spec.h(),
        terms,
        self_test: CovarianceSelfTest { rows, worst_sigma: worst },
    })
}

/// Contract a rank-`r` dense tensor against `sigma` on every index by
/// folding one index at a time.
fn contract(g: &[f64], rank: u32, sigma: &[f64]) -> f64 {
    let n = sigma.len();
    debug_assert_eq!(g.len(), n.pow(rank));
    if rank == 1 {
        return g.iter().zip(sigma).map(|(a, s)| a * s).sum();
    }
    let mut cur: Vec<f64> = Vec::new();
    let mut remaining = rank;
    // First fold reads straight from `g`.
    {
        let rows = n.pow(rank - 1);
        cur.resize(rows, 0.0);
        for (a, slot) in cur.iter_mut().enumerate() {
            let base = a * n;
            let mut acc = 0.0;
            for (b, s) in sigma.iter().enumerate() {
                acc += g[base + b] * s;
            }
            *slot = acc;
        }
        remaining -= 1;
    }
    while remaining > 1 {
        let rows = n.pow(remaining - 1);
        for a in 0..rows {
            let base = a * n;
            let mut acc = 0.0;
            for (b, s) in sigma.iter().enumerate() {
                acc += cur[base + b] * s;
            }
            cur[a] = acc;
        }
        cur.truncate(rows);
        remaining -= 1;
    }
    cur.iter().zip(sigma).map(|(a, s)| a * s).sum()
}

/// The (negated) Hamiltonian `X_j(sigma) + h sum_i sigma_i`.
pub fn hamiltonian_eval(real: &DisorderRealization, system: System, sigma: &[f64]) -> f64 {
    debug_assert_eq!(sigma.len(), real.n);
    let mut acc = real.h * sigma.iter().sum::<f64>();
    for term in &real.terms {
        let g = match system {
            System::One => &term.g1,
            System::Two => &term.g2,
        };
        acc += term.beta * term.scale * contract(g, 2 * term.p, sigma);
    }
    acc
}

/// One walker state on the sphere of radius `sqrt(N)`.
#[derive(Debug, Clone, Serialize)]
pub struct ChainState {
    pub sigma: Vec<f64>,
    /// Cached value of the negated Hamiltonian.
    pub energy: f64,
    pub step_size: f64,
    /// Post-burn-in acceptance statistics.
    pub accepted: usize,
    pub proposed: usize,
}

impl ChainState {
    /// `|sum sigma_i^2 - N| / N`; the walker renormalizes after every
    /// proposal so this stays at roundoff size.
    pub fn sphere_residual(&self) -> f64 {
        let n = self.sigma.len() as f64;
        (self.sigma.iter().map(|x| x * x).sum::<f64>() - n).abs() / n
    }
}

/// Output of one Metropolis run: thinned post-burn-in samples plus the
/// final walker state.
#[derive(Debug, Clone)]
pub struct ChainRun {
    pub samples: Vec<Vec<f64>>,
    pub final_state: ChainState,
    pub sweeps: usize,
    pub burn_in: usize,
}

impl ChainRun {
    pub fn acceptance_rate(&self) -> f64 {
        if self.final_state.proposed > 0 {
            self.final_state.accepted as f64 / self.final_state.proposed as f64
        } else {
            0.0
        }
    }
}

fn random_sphere_point(n: usize, rng: &mut Xoshiro256StarStar) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm_sq: f64 = g.iter().map(|x| x * x).sum();
        if norm_sq > 0.0 {
            let scale = (n as f64 / norm_sq).sqrt();
            return g.iter().map(|x| x * scale).collect();
        }
    }
}

/// Global-move Metropolis sampling of one system's Gibbs measure:
/// propose `sigma' = sqrt(N) (sigma + delta zeta) / |sigma + delta zeta|`
/// with standard normal `zeta`, accept with probability
/// `min(1, exp(E' - E))` where `E` is the negated Hamiltonian. The step
/// size adapts during the first 20% of sweeps and is frozen afterwards;
/// samples are thinned every 5 sweeps.
pub fn metropolis_chain(
    real: &DisorderRealization,
    system: System,
    sweeps: usize,
    seed: u64,
) -> ChainRun {
    let n = real.n;
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut sigma = random_sphere_point(n, &mut rng);
    let mut energy = hamiltonian_eval(real, system, &sigma);
    let burn_in = ((sweeps as f64 * BURN_FRACTION) as usize).max(1).min(sweeps);
    let mut delta = 1.0_f64;
    let mut window_acc = 0usize;
    let mut post_acc = 0usize;
    let mut post_prop = 0usize;
    let mut samples = Vec::new();
    let sqrt_n = (n as f64).sqrt();
    for sweep in 0..sweeps {
        let in_burn = sweep < burn_in;
        let mut proposal = vec![0.0; n];
        let mut norm_sq = 0.0;
        for (slot, &s) in proposal.iter_mut().zip(&sigma) {
            let z: f64 = rng.sample(StandardNormal);
            let v = s + delta * z;
            *slot = v;
            norm_sq += v * v;
        }
        let scale = sqrt_n / norm_sq.sqrt();
        for v in proposal.iter_mut() {
            *v *= scale;
        }
        let new_energy = hamiltonian_eval(real, system, &proposal);
        let log_ratio = new_energy - energy;
        let accept = log_ratio >= 0.0 || rng.gen::<f64>() < log_ratio.exp();
        if accept {
            sigma = proposal;
            energy = new_energy;
            if in_burn {
                window_acc += 1;
            } else {
                post_acc += 1;
            }
        }
        if !in_burn {
            post_prop += 1;
            if (sweep - burn_in).is_multiple_of(THIN) {
                samples.push(sigma.clone());
            }
        } else if (sweep + 1) % ADAPT_WINDOW == 0 {
            let rate = window_acc as f64 / ADAPT_WINDOW as f64;
            if rate < TARGET_ACCEPT.0 {
                delta *= 0.7;
            } else if rate > TARGET_ACCEPT.1 {
                delta *= 1.4;
            }
            delta = delta.clamp(1e-3, 10.0);
            window_acc = 0;
        }
    }
    ChainRun {
        samples,
        final_state: ChainState {
            sigma,
            energy,
            step_size: delta,
            accepted: post_acc,
            proposed: post_prop,
        },
        sweeps,
        burn_in,
    }
}

/// Overlap statistics of the pair measure, aggregated over disorder
/// replicas with equal weights.
#[derive(Debug, Clone, Serialize)]
pub struct OverlapReport {
    pub n: usize,
    pub t: f64,
    pub h: f64,
    pub spec_digest: u64,
    pub u_star: f64,
    /// Mass per bin; bin `i` covers `[-1 + 0.02 i, -1 + 0.02 (i+1))`.
    pub masses: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    /// `(eps, estimated P(|R - u*| > eps), binomial stderr)`.
    pub tails: Vec<(f64, f64, f64)>,
    pub replicas: usize,
    pub effective_samples: usize,
}

impl OverlapReport {
    pub fn bin_center(i: usize) -> f64 {
        -1.0 + BIN_WIDTH * (i as f64 + 0.5)
    }

    /// Total mass of bins contained in `[-r, r]`.
    pub fn mass_within(&self, r: f64) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let lo = -1.0 + BIN_WIDTH * *i as f64;
                let hi = lo + BIN_WIDTH;
                lo >= -r - 1e-12 && hi <= r + 1e-12
            })
            .map(|(_, m)| m)
            .sum()
    }
}

struct ReplicaStats {
    counts: Vec<u64>,
    sum: f64,
    sum_sq: f64,
    tail_counts: Vec<u64>,
    samples: u64,
}

fn run_replica(
    spec: &MixtureSpec,
    n: usize,
    t: f64,
    u_star: f64,
    eps: &[f64],
    sweeps: usize,
    disorder_seed: u64,
) -> Result<ReplicaStats> {
    let real = build_disorder(spec, n, t, disorder_seed)?;
    let run1 = metropolis_chain(&real, System::One, sweeps, derive_seed(disorder_seed, 0xa1));
    let run2 = metropolis_chain(&real, System::Two, sweeps, derive_seed(disorder_seed, 0xb2));
    let mut stats = ReplicaStats {
        counts: vec![0; N_BINS],
        sum: 0.0,
        sum_sq: 0.0,
        tail_counts: vec![0; eps.len()],
        samples: 0,
    };
    for (s1, s2) in run1.samples.iter().zip(&run2.samples) {
        let dot: f64 = s1.iter().zip(s2).map(|(a, b)| a * b).sum();
        let r = dot / n as f64;
        let bin = (((r + 1.0) / BIN_WIDTH) as isize).clamp(0, N_BINS as isize - 1) as usize;
        stats.counts[bin] += 1;
        stats.sum += r;
        stats.sum_sq += r * r;
        for (j, &e) in eps.iter().enumerate() {
            if (r - u_star).abs() > e {
                stats.tail_counts[j] += 1;
            }
        }
        stats.samples += 1;
    }
    Ok(stats)
}

/// Sample the overlap law of two coupled systems. Each replica draws a
/// fresh disorder (seed `base_seed XOR replica`), runs one chain per
/// system and pairs their thinned samples; replicas run in parallel when
/// the `parallel` feature is on.
#[allow(clippy::too_many_arguments)]
pub fn overlap_experiment(
    spec: &MixtureSpec,
    n: usize,
    t: f64,
    u_star: f64,
    eps: &[f64],
    replicas: usize,
    sweeps: usize,
    base_seed: u64,
) -> Result<OverlapReport> {
    experiment_impl(spec, n, t, u_star, eps, replicas, sweeps, base_seed, false)
}

/// Sequential variant of [`overlap_experiment`]; identical output.
#[allow(clippy::too_many_arguments)]
pub fn overlap_experiment_serial(
    spec: &MixtureSpec,
    n: usize,
    t: f64,
    u_star: f64,
    eps: &[f64],
    replicas: usize,
    sweeps: usize,
    base_seed: u64,
) -> Result<OverlapReport> {
    experiment_impl(spec, n, t, u_star, eps, replicas, sweeps, base_seed, true)
}

#[allow(clippy::too_many_arguments)]
fn experiment_impl(
    spec: &MixtureSpec,
    n: usize,
    t: f64,
    u_star: f64,
    eps: &[f64],
    replicas: usize,
    sweeps: usize,
    base_seed: u64,
    force_serial: bool,
) -> Result<OverlapReport> {
    if replicas == 0 {
        return Err(Error::InvalidArgument("need at least one replica".into()));
    }
    let run = |r: usize| {
        run_replica(spec, n, t, u_star, eps, sweeps, base_seed ^ r as u64)
    };
    let results: Vec<Result<ReplicaStats>> = if force_serial {
        (0..replicas).map(run).collect()
    } else {
        map_indices(replicas, run)
    };
    // Ordered sequential reduction keeps the output byte-stable across
    // thread schedules.
    let mut counts = vec![0u64; N_BINS];
    let mut tail_counts = vec![0u64; eps.len()];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut total = 0u64;
    for r in results {
        let s = r?;
        for (acc, c) in counts.iter_mut().zip(&s.counts) {
            *acc += c;
        }
        for (acc, c) in tail_counts.iter_mut().zip(&s.tail_counts) {
            *acc += c;
        }
        sum += s.sum;
        sum_sq += s.sum_sq;
        total += s.samples;
    }
    if total == 0 {
        return Err(Error::Numerical("no paired samples were produced".into()));
    }
    let tf = total as f64;
    let mean = sum / tf;
    let variance = (sum_sq / tf - mean * mean).max(0.0);
    let tails = eps
        .iter()
        .zip(&tail_counts)
        .map(|(&e, &c)| {
            let p = c as f64 / tf;
            (e, p, (p * (1.0 - p) / tf).sqrt())
        })
        .collect();
    Ok(OverlapReport {
        n,
        t,
        h: spec.h(),
        spec_digest: spec.digest(),
        u_star,
        masses: counts.iter().map(|&c| c as f64 / tf).collect(),
        mean,
        variance,
        tails,
        replicas,
        effective_samples: total as usize,
    })
}

/// Least-squares slope of `ln(tail)` against `N` over the points with a
/// strictly positive tail; `(-inf, true)` when fewer than two points
/// qualify.
pub fn fit_log_tail_slope(points: &[(usize, f64)]) -> (f64, bool) {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, tail)| *tail > 0.0)
        .map(|&(n, tail)| (n as f64, tail.ln()))
        .collect();
    if usable.len() < 2 {
        return (f64::NEG_INFINITY, true);
    }
    let k = usable.len() as f64;
    let xm = usable.iter().map(|p| p.0).sum::<f64>() / k;
    let ym = usable.iter().map(|p| p.1).sum::<f64>() / k;
    let num: f64 = usable.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let den: f64 = usable.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum();
    (num / den, false)
}

/// Overlap-tail trend across system sizes at fixed `eps`.
#[derive(Debug, Clone, Serialize)]
pub struct TrendResult {
    pub eps: f64,
    pub slope: f64,
    /// Set when every tail estimate vanished and no slope could be fit.
    pub degenerate: bool,
    pub tails: Vec<(usize, f64)>,
    pub reports: Vec<OverlapReport>,
}

/// Estimate the decay of `P(|R - u*| > eps)` in `N` by running the
/// overlap experiment at each size and fitting `ln(tail)` against `N`.
#[allow(clippy::too_many_arguments)]
pub fn concentration_trend(
    spec: &MixtureSpec,
    t: f64,
    n_list: &[usize],
    eps: f64,
    u_star: f64,
    replicas: usize,
    sweeps: usize,
    seed: u64,
) -> Result<TrendResult> {
    if n_list.len() < 3 {
        return Err(Error::InvalidArgument("need at least three system sizes".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("system sizes must be strictly increasing".into()));
    }
    let mut reports = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let report = overlap_experiment(
            spec,
            n,
            t,
            u_star,
            &[eps],
            replicas,
            sweeps,
            derive_seed(seed, n as u64),
        )?;
        reports.push(report);
    }
    let tails: Vec<(usize, f64)> = reports.iter().map(|r| (r.n, r.tails[0].1)).collect();
    let (slope, degenerate) = fit_log_tail_slope(&tails);
    Ok(TrendResult { eps, slope, degenerate, tails, reports })
}

/// One row of the log-partition concentration table.
#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub s: f64,
    pub s_in_std_units: f64,
    pub empirical: f64,
    pub bound: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailTable {
    /// Variance proxy `a = N xi(1)` entering the bound `2 exp(-s^2/(4a))`.
    pub a: f64,
    pub draws: usize,
    pub rows: Vec<TailRow>,
}

impl TailTable {
    /// Every row satisfies `empirical <= bound + margin * stderr`.
    pub fn respects_bound(&self, margin: f64) -> bool {
        self.rows
            .iter()
            .all(|r| r.empirical <= r.bound + margin * r.stderr.max(1e-12))
    }
}

/// Empirical test of Gaussian concentration for
/// `X = log sum_i w_i exp(g(z_i))` over a fixed `M`-point measure on the
/// sphere, with `g` the disorder part of the energy (variance `N xi(1)`
/// at every point) and `w_i` the deterministic field weights. Draws
/// independent disorders and compares the exceedance frequencies of
/// `|X - mean|` with `2 exp(-s^2 / (4 N xi(1)))`.
pub fn logz_concentration_check(
    spec: &MixtureSpec,
    n: usize,
    m_points: usize,
    draws: usize,
    seed: u64,
) -> Result<TailTable> {
    if m_points < 1000 {
        return Err(Error::InvalidArgument(format!(
            "need at least 1000 support points, got {m_points}"
        )));
    }
    if draws < 2 {
        return Err(Error::InvalidArgument("need at least two draws".into()));
    }
    let mut rng = Xoshiro256StarStar::seed_from_u64(derive_seed(seed, 0x5109));
    let points: Vec<Vec<f64>> = (0..m_points).map(|_| random_sphere_point(n, &mut rng)).collect();
    let h = spec.h();
    let log_weights: Vec<f64> = points
        .iter()
        .map(|z| h * z.iter().sum::<f64>())
        .collect();
    let a = n as f64 * spec.xi(1.0);
    let xs: Vec<Result<f64>> = map_indices(draws, |d| {
        // t = 0 yields two independent systems; only system one is used.
        let real = build_disorder(spec, n, 0.0, derive_seed(seed, d as u64))?;
        let mut max = f64::NEG_INFINITY;
        let mut vals = Vec::with_capacity(points.len());
        for (z, lw) in points.iter().zip(&log_weights) {
            let g = hamiltonian_eval(&real, System::One, z) - h * z.iter().sum::<f64>();
            let v = g + lw;
            vals.push(v);
            if v > max {
                max = v;
            }
        }
        let acc: f64 = vals.iter().map(|v| (v - max).exp()).sum();
        Ok(max + acc.ln())
    });
    let mut values = Vec::with_capacity(draws);
    for x in xs {
        values.push(x?);
    }
    let mean = values.iter().sum::<f64>() / draws as f64;
    let s_values: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|c| c * a.sqrt()).collect();
    let rows = s_values
        .iter()
        .map(|&s| {
            // The bound is stated for s > 0; a floor keeps the degenerate
            // disorder-free case (a = 0, X deterministic up to roundoff)
            // from counting pure floating-point noise.
            let threshold = s.max(1e-9 * (1.0 + mean.abs()));
            let count = values.iter().filter(|&&x| (x - mean).abs() >= threshold).count();
            let empirical = count as f64 / draws as f64;
            let bound = (2.0 * (-s * s / (4.0 * a)).exp()).min(1.0);
            TailRow {
                s,
                s_in_std_units: if a > 0.0 { s / a.sqrt() } else { 0.0 },
                empirical,
                bound,
                stderr: (empirical * (1.0 - empirical) / draws as f64).sqrt(),
            }
        })
        .collect();
    Ok(TailTable { a, draws, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disorder_is_deterministic_and_self_consistent() {
        let spec = MixtureSpec::pure(1, 1.0, 0.0);
        let a = build_disorder(&spec, 8, 0.5, 42).unwrap();
        let b = build_disorder(&spec, 8, 0.5, 42).unwrap();
        assert_eq!(a.terms[0].g1, b.terms[0].g1);
        assert!(a.self_test.passes(4.0), "worst {}", a.self_test.worst_sigma);
    }

    #[test]
    fn fully_correlated_systems_coincide() {
        let spec = MixtureSpec::new(&[(1, 0.7), (2, 0.2)], 0.3);
        let real = build_disorder(&spec, 8, 1.0, 7).unwrap();
        let mut rng = Xoshiro256StarStar::seed_from_u64(1);
        for _ in 0..100 {
            let sigma = random_sphere_point(8, &mut rng);
            let e1 = hamiltonian_eval(&real, System::One, &sigma);
            let e2 = hamiltonian_eval(&real, System::Two, &sigma);
            assert_eq!(e1, e2);
        }
    }

    #[test]
    fn decoupled_systems_leave_shared_tensor_out() {
        let spec = MixtureSpec::pure(1, 1.0, 0.0);
        let real = build_disorder(&spec, 8, 0.0, 7).unwrap();
        // cross-moment of the two tensors should be near zero
        let dot: f64 = real.terms[0]
            .g1
            .iter()
            .zip(&real.terms[0].g2)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / real.terms[0].g1.len() as f64;
        assert!(dot.abs() < 3.0 / (real.terms[0].g1.len() as f64).sqrt() * 1.5, "{dot}");
    }

    #[test]
    fn pairwise_energy_correlation_tracks_t() {
        // Empirical E X1(s1) X2(s2) / (N xi(R)) over fresh disorder draws.
        let spec = MixtureSpec::pure(1, 1.0, 0.0);
        let n = 16;
        let t = 0.5;
        let mut rng = Xoshiro256StarStar::seed_from_u64(99);
        let s1 = random_sphere_point(n, &mut rng);
        let s2 = random_sphere_point(n, &mut rng);
        let r: f64 = s1.iter().zip(&s2).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        let denom = n as f64 * spec.xi(r);
        let draws = 1000;
        let mut acc = 0.0;
        let mut acc_sq = 0.0;
        for d in 0..draws {
            let real = build_disorder(&spec, n, t, 1000 + d).unwrap();
            let prod = hamiltonian_eval(&real, System::One, &s1)
                * hamiltonian_eval(&real, System::Two, &s2);
            acc += prod / denom;
            acc_sq += (prod / denom) * (prod / denom);
        }
        let mean = acc / draws as f64;
        let sd = ((acc_sq / draws as f64 - mean * mean) / draws as f64).sqrt();
        assert!((mean - t).abs() <= 3.0 * sd, "mean {mean}, sd {sd}");
    }

    #[test]
    fn quadratic_contraction_matches_matrix_path() {
        let spec = MixtureSpec::pure(1, 1.0, 0.0);
        let n = 6;
        let real = build_disorder(&spec, n, 1.0, 5).unwrap();
        let mut rng = Xoshiro256StarStar::seed_from_u64(3);
        let sigma = random_sphere_point(n, &mut rng);
        // Independent quadratic-form evaluation.
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += real.terms[0].g1[i * n + j] * sigma[i] * sigma[j];
            }
        }
        let want = real.terms[0].beta * real.terms[0].scale * quad;
        let got = hamiltonian_eval(&real, System::One, &sigma);
        assert!((got - want).abs() < 1e-10 * want.abs().max(1.0));
    }

    #[test]
    fn field_only_energy_is_coordinate_sum() {
        let spec = MixtureSpec::field_only(1.0);
        let real = build_disorder(&spec, 8, 0.5, 11).unwrap();
        let mut rng = Xoshiro256StarStar::seed_from_u64(4);
        let sigma = random_sphere_point(8, &mut rng);
        let want: f64 = sigma.iter().sum();
        assert_eq!(hamiltonian_eval(&real, System::One, &sigma), want);
    }

    #[test]
    fn even_mixture_energy_is_even_in_sigma() {
        let spec = MixtureSpec::new(&[(1, 0.5), (2, 0.25)], 0.0);
        let real = build_disorder(&spec, 8, 0.7, 13).unwrap();
        let mut rng = Xoshiro256StarStar::seed_from_u64(5);
        let sigma = random_sphere_point(8, &mut rng);
        let flipped: Vec<f64> = sigma.iter().map(|s| -s).collect();
        let a = hamiltonian_eval(&real, System::One, &sigma);
        let b = hamiltonian_eval(&real, System::One, &flipped);
        assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn chain_stays_on_sphere_and_is_deterministic() {
        let spec = MixtureSpec::pure(1, 1.0, 0.0);
        let real = build_disorder(&spec, 12, 0.5, 21).unwrap();
        let run = metropolis_chain(&real, System::One, 400, 77);
        for s in &run.samples {
            let norm: f64 = s.iter().map(|x| x * x).sum();
            assert!((norm - 12.0).abs() <= 1e-8 * 12.0);
        }
        let rerun = metropolis_chain(&real, System::One, 400, 77);
        assert_eq!(run.samples, rerun.samples);
        assert!(!run.samples.is_empty());
        assert!(run.final_state.sphere_residual() <= 1e-8);
        assert!(run.acceptance_rate() > 0.0 && run.acceptance_rate() < 1.0);
        assert_eq!(run.final_state.sigma, rerun.final_state.sigma);
    }

    #[test]
    fn uniform_measure_statistics() {
        // xi = 0, h = 0: the chain samples the uniform sphere measure.
        let spec = MixtureSpec::field_only(0.0);
        let real = build_disorder(&spec, 16, 0.0, 31).unwrap();
        let run = metropolis_chain(&real, System::One, 4000, 99);
        let count = run.samples.len() as f64;
        let mean_first: f64 = run.samples.iter().map(|s| s[0]).sum::<f64>() / count;
        // sd of one coordinate is about 1; samples are correlated, allow slack.
        assert!(mean_first.abs() < 4.0 / count.sqrt() * 3.0, "{mean_first}");
        for s in &run.samples {
            let msq: f64 = s.iter().map(|x| x * x).sum::<f64>() / 16.0;
            assert!((msq - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn tail_slope_fit_basics() {
        let (slope, flag) = fit_log_tail_slope(&[(8, 0.5), (16, 0.25), (24, 0.125)]);
        assert!(!flag);
        assert!((slope - (-(2.0_f64.ln()) / 8.0)).abs() < 1e-12);
        let (slope, flag) = fit_log_tail_slope(&[(8, 0.0), (16, 0.0)]);
        assert!(flag);
        assert_eq!(slope, f64::NEG_INFINITY);
    }

    #[test]
    fn epsilon_beyond_range_gives_empty_tails() {
        let spec = MixtureSpec::pure(1, 0.4, 0.0);
        let report =
            overlap_experiment(&spec, 8, 0.5, 0.0, &[2.0], 3, 300, 1234).unwrap();
        assert_eq!(report.tails[0].1, 0.0);
        let total: f64 = report.masses.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
