//! Reproducible Monte-Carlo sweeps, analytic curves, structural verification
//! and hard-decision capacity.
//!
//! Every trial draws from its own generator derived from
//! `(seed, SNR index, trial index)`. Trials run in fixed-size batches and
//! the per-batch error counts are summed in trial order, so results do not
//! depend on the number of worker threads.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ber_analytics::{capacity, psk_ber, qam_ber, BerParams, QuadratureConfig};
use crate::code_construction::{build_mother, gram_check, EncodingStructure};
use crate::encoded_channel::{
    apply_encoded_channel, augmented, build_encoded_channel, quasi_orthogonality_residual,
};
use crate::error::{GabbaError, Result};
use crate::fading_sim::{add_awgn, sample_gain, trial_rng, BranchStat, ChannelModel, PowerProfile};
use crate::matrix::{vec_norm, C64};
use crate::modem::{Family, ModulationSpec};
use crate::orthogonal_decoder::{decode, permutation_indexes, reduce_channel, reduce_channel_dense, Partition};

/// Trials evaluated between two checks of the stopping rule.
pub const BATCH: u64 = 256;

/// Everything needed to reproduce one simulated BER curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub k: usize,
    pub n_t: usize,
    pub n_r: usize,
    pub modulation: ModulationSpec,
    pub channel: ChannelModel,
    pub profile: PowerProfile,
    /// Es/N0 points in dB; `+inf` means a noiseless run.
    pub esno_db: Vec<f64>,
    /// Trial cap per point.
    pub trials: u64,
    /// Bit errors after which a point stops early.
    pub target_errors: u64,
    pub seed: u64,
    pub quadrature: QuadratureConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || !self.k.is_power_of_two() {
            return Err(GabbaError::Config(format!("K = {} must be a power of two >= 2", self.k)));
        }
        if self.n_t == 0 || self.n_t > self.k {
            return Err(GabbaError::Config(format!("n_t = {} must lie in 1..={}", self.n_t, self.k)));
        }
        if self.n_r == 0 {
            return Err(GabbaError::Config("n_r must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(GabbaError::Config("trials must be at least 1".into()));
        }
        if self.esno_db.is_empty() || self.esno_db.iter().any(|x| x.is_nan()) {
            return Err(GabbaError::Config("the Es/N0 sweep is empty or contains NaN".into()));
        }
        if self.quadrature.points < 100 {
            return Err(GabbaError::Config("quadrature needs at least 100 points".into()));
        }
        self.channel.branches(self.n_t, self.profile).map_err(|e| GabbaError::Config(e.to_string()))?;
        Ok(())
    }
}

/// Inclusive dB grid from `start` to `stop`.
pub fn esno_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(GabbaError::Config(format!("bad Es/N0 sweep {start}:{step}:{stop}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// One swept point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub esno_db: f64,
    pub ber_sim: f64,
    pub ber_analytic: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
}

fn write_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| GabbaError::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| GabbaError::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| GabbaError::Config(e.to_string()))
}

impl SweepResult {
    /// CSV with header `esno_db,ber_sim,ber_analytic,trials,bit_errors,seconds`.
    pub fn to_csv(&self) -> Result<String> {
        write_csv(&self.rows)
    }

    /// The configuration as JSON, for a sidecar next to the CSV.
    pub fn config_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.config).map_err(|e| GabbaError::Config(e.to_string()))
    }
}

/// Branch statistics seen by the analytic model: the transmit power is
/// split evenly over the `n_t` antennas.
pub fn link_params(channel: &ChannelModel, profile: PowerProfile, n_t: usize, n_r: usize) -> Result<BerParams> {
    let branches = channel
        .branches(n_t, profile)?
        .into_iter()
        .map(|b| b.with_omega(b.omega / n_t as f64))
        .collect();
    Ok(BerParams::full_rate(branches, n_r))
}

/// Analytic BER for either modulation family at linear Es/N0 `snr`.
pub fn analytic_ber(modulation: ModulationSpec, params: &BerParams, snr: f64, quad: &QuadratureConfig) -> Result<f64> {
    if snr.is_infinite() {
        return Ok(0.0);
    }
    match modulation.family() {
        Family::Psk => psk_ber(modulation.order(), params, snr, quad),
        Family::Qam => qam_ber(modulation.order(), params, snr, quad),
    }
}

struct TrialSetup<'a> {
    config: &'a ExperimentConfig,
    structure: EncodingStructure,
    branches: Vec<BranchStat>,
    n0: f64,
    point: u64,
}

fn run_trial(setup: &TrialSetup<'_>, trial: u64) -> Result<u64> {
    let cfg = setup.config;
    let mut rng = trial_rng(cfg.seed, setup.point, trial);
    let bps = cfg.modulation.bits_per_symbol();
    let bits: Vec<u8> = (0..cfg.k * bps).map(|_| rng.random::<bool>() as u8).collect();
    let symbols: Vec<C64> = bits.chunks(bps).map(|b| cfg.modulation.map(b)).collect::<Result<_>>()?;
    let x = setup.structure.encode(&symbols)?;
    let amplitude = 1.0 / (cfg.n_t as f64).sqrt();
    let mut received = Vec::with_capacity(cfg.n_r);
    let mut channels = Vec::with_capacity(cfg.n_r);
    for _ in 0..cfg.n_r {
        let h: Vec<C64> = setup.branches.iter().map(|b| sample_gain(b, &mut rng) * amplitude).collect();
        received.push(add_awgn(&x.mul_vec(&h), setup.n0, &mut rng));
        channels.push(h);
    }
    let out = decode(&received, &channels, cfg.k)?;
    let errors = out
        .estimates
        .iter()
        .zip(bits.chunks(bps))
        .map(|(z, b)| cfg.modulation.demap(*z).iter().zip(b).filter(|(a, c)| a != c).count() as u64)
        .sum();
    Ok(errors)
}

/// Runs the Monte-Carlo sweep described by `config`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let structure = build_mother(config.k)?.puncture(config.n_t)?;
    let branches = config.channel.branches(config.n_t, config.profile)?;
    let params = link_params(&config.channel, config.profile, config.n_t, config.n_r)?;
    let bits_per_trial = (config.k * config.modulation.bits_per_symbol()) as f64;
    let mut rows = Vec::with_capacity(config.esno_db.len());
    for (point, &esno) in config.esno_db.iter().enumerate() {
        let start = Instant::now();
        let snr = 10f64.powf(esno / 10.0);
        let setup =
            TrialSetup { config, structure: structure.clone(), branches: branches.clone(), n0: 1.0 / snr, point: point as u64 };
        let (mut trials, mut errors) = (0u64, 0u64);
        while trials < config.trials && errors < config.target_errors.max(1) {
            let end = (trials + BATCH).min(config.trials);
            let counts: Vec<u64> = (trials..end).into_par_iter().map(|t| run_trial(&setup, t)).collect::<Result<_>>()?;
            errors += counts.iter().sum::<u64>();
            trials = end;
        }
        rows.push(SweepRow {
            esno_db: esno,
            ber_sim: errors as f64 / (trials as f64 * bits_per_trial),
            ber_analytic: analytic_ber(config.modulation, &params, snr, &config.quadrature)?,
            trials,
            bit_errors: errors,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(SweepResult { config: config.clone(), rows })
}

/// Parameters of an analytic BER curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    pub modulation: ModulationSpec,
    pub n_t: usize,
    pub n_r: usize,
    pub rho: f64,
    pub eta: f64,
    pub channel: ChannelModel,
    pub profile: PowerProfile,
    /// Per-branch severities overriding the channel model's single `m`.
    pub severities: Option<Vec<f64>>,
    pub esno_db: Vec<f64>,
    pub quadrature: QuadratureConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeRow {
    pub esno_db: f64,
    pub ber: f64,
}

/// Analytic BER over the configured sweep.
pub fn analyze(config: &AnalyzeConfig) -> Result<Vec<AnalyzeRow>> {
    if config.n_t == 0 || config.n_r == 0 || config.esno_db.is_empty() {
        return Err(GabbaError::Config("n_t, n_r and the sweep must be non-empty".into()));
    }
    let mut params = link_params(&config.channel, config.profile, config.n_t, config.n_r)
        .map_err(|e| GabbaError::Config(e.to_string()))?;
    if let Some(ms) = &config.severities {
        if ms.len() != config.n_t {
            return Err(GabbaError::Config(format!("{} severities given for {} branches", ms.len(), config.n_t)));
        }
        let nakagami = matches!(config.channel, ChannelModel::Nakagami { .. });
        params.branches = params
            .branches
            .iter()
            .zip(ms)
            .map(|(b, &m)| if nakagami { BranchStat::nakagami(m, b.omega) } else { BranchStat::physical(m, b.omega) })
            .collect::<Result<_>>()
            .map_err(|e| GabbaError::Config(e.to_string()))?;
    }
    params.rho = config.rho;
    params.eta = config.eta;
    config
        .esno_db
        .iter()
        .map(|&e| {
            analytic_ber(config.modulation, &params, 10f64.powf(e / 10.0), &config.quadrature)
                .map(|ber| AnalyzeRow { esno_db: e, ber })
        })
        .collect()
}

/// CSV with header `esno_db,ber`.
pub fn analyze_csv(rows: &[AnalyzeRow]) -> Result<String> {
    write_csv(rows)
}

/// Modulations compared by the capacity sweep.
pub const CAPACITY_MODULATIONS: [&str; 8] = ["psk2", "psk4", "psk8", "qam16", "qam64", "qam256", "qam1024", "qam4096"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityConfig {
    pub n_t: usize,
    pub n_r: usize,
    pub channel: ChannelModel,
    pub profile: PowerProfile,
    pub esno_db: Vec<f64>,
    pub quadrature: QuadratureConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub esno_db: f64,
    /// Hard-decision rate per modulation, in [`CAPACITY_MODULATIONS`] order.
    pub rates: Vec<f64>,
    pub bers: Vec<f64>,
    /// Largest rate over all modulations.
    pub envelope: f64,
}

/// Hard-decision rate of every modulation and their upper envelope.
pub fn capacity_sweep(config: &CapacityConfig) -> Result<Vec<CapacityRow>> {
    let params = link_params(&config.channel, config.profile, config.n_t, config.n_r)
        .map_err(|e| GabbaError::Config(e.to_string()))?;
    let mods: Vec<ModulationSpec> = CAPACITY_MODULATIONS.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    config
        .esno_db
        .iter()
        .map(|&e| {
            let snr = 10f64.powf(e / 10.0);
            let mut rates = Vec::with_capacity(mods.len());
            let mut bers = Vec::with_capacity(mods.len());
            for m in &mods {
                let p = analytic_ber(*m, &params, snr, &config.quadrature)?.clamp(0.0, 0.5);
                bers.push(p);
                rates.push(capacity(m.bits_per_symbol(), params.rho, p)?);
            }
            let envelope = rates.iter().copied().fold(0.0, f64::max);
            Ok(CapacityRow { esno_db: e, rates, bers, envelope })
        })
        .collect()
}

/// CSV with one rate column per modulation plus `envelope`.
pub fn capacity_csv(rows: &[CapacityRow]) -> String {
    let mut out = format!("esno_db,{},envelope\n", CAPACITY_MODULATIONS.join(","));
    for r in rows {
        let rates: Vec<String> = r.rates.iter().map(|x| x.to_string()).collect();
        out.push_str(&format!("{},{},{}\n", r.esno_db, rates.join(","), r.envelope));
    }
    out
}

/// Monte-Carlo `E[log2(1 + snr/n_t · ‖H‖²)]`, the Shannon rate of the
/// orthogonalized scalar channel, used as an external reference only.
pub fn orthogonal_shannon_rate(config: &CapacityConfig, esno_db: f64, draws: u64, seed: u64) -> Result<f64> {
    let branches = config.channel.branches(config.n_t, config.profile)?;
    let snr = 10f64.powf(esno_db / 10.0);
    let total: f64 = (0..draws)
        .map(|d| {
            let mut rng = trial_rng(seed, u64::MAX, d);
            let energy: f64 = (0..config.n_r)
                .flat_map(|_| branches.iter().map(|b| sample_gain(b, &mut rng).norm_sqr()).collect::<Vec<_>>())
                .sum();
            (1.0 + snr / config.n_t as f64 * energy).log2()
        })
        .sum();
    Ok(total / draws as f64)
}

/// One line of a verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// `module/property`.
    pub name: String,
    pub k: usize,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:<36} K={:<4} value={:.3e} tol={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.k,
            self.value,
            self.tolerance
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    fn push(&mut self, name: &str, k: usize, value: f64, tolerance: f64) {
        self.checks.push(Check { name: name.into(), k, value, tolerance, passed: value <= tolerance });
    }
}

/// A deliberate sign flip in the mother matrix of one block size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fault {
    pub k: usize,
    pub row: usize,
    pub col: usize,
}

fn random_vector(rng: &mut impl Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)).collect()
}

/// Relative error of a noiseless encode, channel and decode round trip.
pub fn round_trip_error(k: usize, n_t: usize, n_r: usize, rng: &mut impl Rng) -> Result<(f64, Vec<f64>)> {
    let s = random_vector(rng, k);
    let x = build_mother(k)?.puncture(n_t)?.encode(&s)?;
    let channels: Vec<Vec<C64>> = (0..n_r).map(|_| random_vector(rng, n_t)).collect();
    let received: Vec<Vec<C64>> = channels.iter().map(|h| x.mul_vec(h)).collect();
    let out = decode(&received, &channels, k)?;
    let diff: Vec<C64> = out.estimates.iter().zip(&s).map(|(a, b)| a - b).collect();
    Ok((vec_norm(&diff) / vec_norm(&s), out.stages.iter().map(|st| st.off_block).collect()))
}

/// Structural suite for every block size `2, 4, …, k_max`.
pub fn verify(k_max: usize, seed: u64, fault: Option<Fault>) -> Result<VerifyReport> {
    if k_max < 2 || !k_max.is_power_of_two() {
        return Err(GabbaError::Config(format!("K_max = {k_max} must be a power of two >= 2")));
    }
    let start = Instant::now();
    let mut report = VerifyReport::default();
    let listed: [(usize, Vec<usize>, Vec<usize>); 4] = [
        (2, vec![1], vec![2]),
        (4, vec![1, 4], vec![2, 3]),
        (8, vec![1, 4, 6, 7], vec![2, 3, 5, 8]),
        (16, vec![1, 4, 6, 7, 10, 11, 13, 16], vec![2, 3, 5, 8, 9, 12, 14, 15]),
    ];
    for (n, p0, p1) in listed {
        let got = permutation_indexes(n)?.one_based();
        report.push("orthogonal_decoder/permutation_sets", n, if got == (p0, p1) { 0.0 } else { 1.0 }, 0.0);
    }

    let mut k = 2;
    while k <= k_max {
        let mut rng = trial_rng(seed, k as u64, 0);
        let mut structure = build_mother(k)?;
        if let Some(f) = fault.filter(|f| f.k == k) {
            structure = structure.with_flipped_sign(f.row % k, f.col % k);
        }
        let shape_ok = structure.is_dense() && structure.is_complete();
        report.push("code_construction/dense_complete", k, if shape_ok { 0.0 } else { 1.0 }, 0.0);

        let s = random_vector(&mut rng, k);
        let c = structure.encode(&s)?;
        let g = gram_check(&c)?;
        report.push("code_construction/gram_off_block", k, g.residual / c.frobenius().powi(2), 1e-10);

        for n_t in [k, 3.min(k)] {
            let h = random_vector(&mut rng, n_t);
            let c_nt = structure.puncture(n_t)?.encode(&s)?;
            let direct = c_nt.mul_vec(&h);
            let enc = build_encoded_channel(&h, k)?;
            let via = apply_encoded_channel(&enc, &augmented(&s))?;
            let diff: Vec<C64> = direct.iter().zip(&via).map(|(a, b)| a - b).collect();
            report.push("encoded_channel/eq16_identity", k, vec_norm(&diff) / vec_norm(&direct), 1e-12);
        }

        let h = random_vector(&mut rng, k);
        report.push("encoded_channel/quasi_orthogonality", k, quasi_orthogonality_residual(&h, k)?, 1e-10);

        let enc = build_encoded_channel(&h, k)?;
        let upper = reduce_channel_dense(&enc, Partition::Upper);
        let lower = reduce_channel_dense(&enc, Partition::Lower);
        let structured = reduce_channel(&enc)?.matrix;
        let scale = upper.frobenius();
        let partition_gap = upper.sub(&lower).frobenius().max(upper.sub(&structured).frobenius()) / scale;
        report.push("orthogonal_decoder/reduced_partitions", k, partition_gap, 1e-12);

        let mut worst_round_trip: f64 = 0.0;
        let mut worst_block: f64 = 0.0;
        let mut nts = vec![k, k - 1, 3];
        nts.retain(|&n| n >= 1 && n <= k);
        nts.dedup();
        for &n_t in &nts {
            for n_r in [1, 2, 4] {
                let (err, blocks) = round_trip_error(k, n_t, n_r, &mut rng)?;
                worst_round_trip = worst_round_trip.max(err);
                worst_block = blocks.into_iter().fold(worst_block, f64::max);
            }
        }
        if fault.is_some_and(|f| f.k == k) {
            let s = random_vector(&mut rng, k);
            let h = random_vector(&mut rng, k);
            let r = structure.encode(&s)?.mul_vec(&h);
            let out = decode(&[r], &[h], k)?;
            let diff: Vec<C64> = out.estimates.iter().zip(&s).map(|(a, b)| a - b).collect();
            worst_round_trip = worst_round_trip.max(vec_norm(&diff) / vec_norm(&s));
        }
        report.push("orthogonal_decoder/round_trip", k, worst_round_trip, 1e-9);
        if k >= 4 {
            report.push("orthogonal_decoder/conjectures_block_vanishing", k, worst_block, 1e-10);
        }
        k *= 2;
    }
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
