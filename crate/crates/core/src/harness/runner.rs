use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{draw_channel, make_tx_window, receive, ChannelRealization, SystemConfig};
use crate::equalizer::{mmse_bound, FullRankDfe};
use crate::error::{Error, Result};
use crate::jio::JioDfe;
use crate::modem::{count_bit_errors, Frame};
use crate::numerics::{mix_seed, ComplexVector, SeededRng};

use super::config::{ExperimentConfig, Scheme};

const CHANNEL_STREAM: u64 = 1;
const BITS_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

/// Seed of run `run` of an experiment.
pub fn run_seed(base_seed: u64, run: usize) -> u64 {
    mix_seed(base_seed, run as u64)
}

/// Channel, frame and noise seed of one run. Noise is drawn at unit
/// variance and scaled, so every SNR point of a run sees the same
/// realization.
#[derive(Debug, Clone)]
pub struct Packet {
    pub channel: ChannelRealization,
    pub frame: Frame,
    noise_seed: u64,
}

impl Packet {
    pub fn generate(system: &SystemConfig, seed: u64) -> Result<Self> {
        let root = SeededRng::new(seed);
        let channel = draw_channel(&mut root.substream(CHANNEL_STREAM), system)?;
        let frame = Frame::random(
            &mut root.substream(BITS_STREAM),
            system.n_tx,
            system.packet_len,
            system.train_len,
        );
        Ok(Self {
            channel,
            frame,
            noise_seed: root.substream(NOISE_STREAM).seed(),
        })
    }

    pub fn observations(&self, noise_var: f64) -> Result<Vec<ComplexVector>> {
        let mut rng = SeededRng::new(self.noise_seed);
        (0..self.frame.len())
            .map(|i| {
                let x = make_tx_window(&self.frame.symbols, i, self.channel.window_len());
                receive(&self.channel, &x, noise_var, &mut rng)
            })
            .collect()
    }
}

/// Result of equalizing one packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketOutcome {
    /// Payload bit errors.
    pub bit_errors: u64,
    /// Payload bits.
    pub bits: u64,
    /// Bit errors of every symbol time, training included, summed over streams.
    pub error_trace: Vec<u32>,
}

impl PacketOutcome {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }
}

/// One receiver configuration evaluated on every run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub scheme: Scheme,
    pub rank: usize,
    pub snr_db: f64,
}

type Detector = Box<dyn FnMut(&ComplexVector, Option<&[Complex64]>) -> Result<Vec<Complex64>>>;

fn equalize(
    cfg: &ExperimentConfig,
    packet: &Packet,
    ys: &[ComplexVector],
    noise_var: f64,
    scheme: Scheme,
    rank: usize,
) -> Result<PacketOutcome> {
    let sys = &cfg.system;
    let m = sys.obs_len();
    let frame = &packet.frame;
    let mut detect: Detector = match scheme {
        Scheme::FullRank => {
            let mut eq = FullRankDfe::new(m, sys.n_tx, cfg.lambda_full_rank, cfg.delta)?;
            Box::new(move |y, t| eq.process(y, t))
        }
        Scheme::Jio => {
            let mut eq = JioDfe::new(m, sys.n_tx, rank, cfg.lambda_jio, cfg.delta)?;
            Box::new(move |y, t| eq.process(y, t))
        }
        Scheme::MmseBound => {
            let eq = mmse_bound(&packet.channel, noise_var, sys.symbol_variance)?;
            Box::new(move |y, _| eq.detect(y))
        }
    };
    let mut error_trace = Vec::with_capacity(ys.len());
    let mut bit_errors = 0u64;
    for (i, y) in ys.iter().enumerate() {
        let truth = frame.column(i);
        let training = frame.is_training(i).then_some(truth.as_slice());
        let detected = detect(y, training)?;
        let errors = count_bit_errors(&detected, &truth)?;
        error_trace.push(errors as u32);
        if !frame.is_training(i) {
            bit_errors += errors as u64;
        }
    }
    let bits = 2 * (sys.n_tx * (frame.len() - frame.train_len)) as u64;
    Ok(PacketOutcome {
        bit_errors,
        bits,
        error_trace,
    })
}

/// Draw the packet of `seed`, train for `train_len` symbols, then run
/// decision-directed and count payload bit errors.
pub fn run_packet(cfg: &ExperimentConfig, scheme: Scheme, rank: usize, snr_db: f64, seed: u64) -> Result<PacketOutcome> {
    let system = SystemConfig { snr_db, ..cfg.system };
    let packet = Packet::generate(&system, seed)?;
    let noise_var = system.noise_variance();
    let ys = packet.observations(noise_var)?;
    equalize(cfg, &packet, &ys, noise_var, scheme, rank)
}

/// Evaluate every job on every run; `result[run][job]`. Runs execute in
/// parallel and all jobs of a run share its packet.
pub fn run_grid(cfg: &ExperimentConfig, jobs: &[Job]) -> Result<Vec<Vec<PacketOutcome>>> {
    cfg.validate()?;
    if jobs.is_empty() {
        return Err(Error::Config("no jobs to run".into()));
    }
    (0..cfg.n_runs)
        .into_par_iter()
        .map(|run| {
            let packet = Packet::generate(&cfg.system, run_seed(cfg.base_seed, run))?;
            let mut cache: Vec<(f64, f64, Vec<ComplexVector>)> = Vec::new();
            jobs.iter()
                .map(|job| {
                    if !cache.iter().any(|(snr, _, _)| *snr == job.snr_db) {
                        let noise_var = SystemConfig {
                            snr_db: job.snr_db,
                            ..cfg.system
                        }
                        .noise_variance();
                        cache.push((job.snr_db, noise_var, packet.observations(noise_var)?));
                    }
                    let (_, noise_var, ys) = cache.iter().find(|(snr, _, _)| *snr == job.snr_db).expect("cached");
                    equalize(cfg, &packet, ys, *noise_var, job.scheme, job.rank)
                })
                .collect()
        })
        .collect()
}

/// Mean, standard error and total bits of per-run BERs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub scheme: Scheme,
    pub value: f64,
    pub ber: f64,
    pub stderr: f64,
    pub bits: u64,
}

impl BerPoint {
    /// `bers[r]` is the BER of run `r`, each measured over `bits_per_run`.
    pub fn from_runs(scheme: Scheme, value: f64, bers: &[f64], bits_per_run: u64) -> Self {
        let n = bers.len() as f64;
        let mean = bers.iter().sum::<f64>() / n;
        let stderr = if bers.len() > 1 {
            let var = bers.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self {
            scheme,
            value,
            ber: mean,
            stderr,
            bits: bits_per_run * bers.len() as u64,
        }
    }
}

/// BER against one sweep variable, for one or more schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    /// Name of the swept variable: `rank`, `snr_db` or `symbols`.
    pub sweep: String,
    pub seed: u64,
    pub config_hash: String,
    pub points: Vec<BerPoint>,
}

impl BerCurve {
    pub fn new(sweep: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            sweep: sweep.to_string(),
            seed: cfg.base_seed,
            config_hash: cfg.config_hash(),
            points: Vec::new(),
        }
    }

    /// Points of one scheme, in sweep order.
    pub fn series(&self, scheme: Scheme) -> Vec<BerPoint> {
        self.points.iter().filter(|p| p.scheme == scheme).copied().collect()
    }

    pub fn schemes(&self) -> Vec<Scheme> {
        let mut out: Vec<Scheme> = Vec::new();
        for p in &self.points {
            if !out.contains(&p.scheme) {
                out.push(p.scheme);
            }
        }
        out
    }
}

fn point(scheme: Scheme, value: f64, outcomes: &[Vec<PacketOutcome>], job: usize) -> BerPoint {
    let bers: Vec<f64> = outcomes.iter().map(|run| run[job].ber()).collect();
    BerPoint::from_runs(scheme, value, &bers, outcomes[0][job].bits)
}

/// Mean payload BER against the JIO rank at `system.snr_db`. Receivers that
/// have no rank are evaluated once and repeated on every rank row.
pub fn sweep_rank(cfg: &ExperimentConfig) -> Result<BerCurve> {
    let snr_db = cfg.system.snr_db;
    let mut jobs = Vec::new();
    let mut index = Vec::new();
    for &scheme in &cfg.schemes {
        if scheme.uses_rank() {
            let first = jobs.len();
            for &rank in &cfg.ranks {
                jobs.push(Job { scheme, rank, snr_db });
            }
            index.push((scheme, Some(first)));
        } else {
            index.push((scheme, None));
            jobs.push(Job {
                scheme,
                rank: cfg.rank,
                snr_db,
            });
        }
    }
    let outcomes = run_grid(cfg, &jobs)?;
    let mut curve = BerCurve::new("rank", cfg);
    let mut next = 0;
    for (scheme, ranked) in index {
        if ranked.is_some() {
            for (k, &rank) in cfg.ranks.iter().enumerate() {
                curve.points.push(point(scheme, rank as f64, &outcomes, next + k));
            }
            next += cfg.ranks.len();
        } else {
            for &rank in &cfg.ranks {
                curve.points.push(point(scheme, rank as f64, &outcomes, next));
            }
            next += 1;
        }
    }
    Ok(curve)
}

/// Mean payload BER against SNR, the JIO receiver at `rank`.
pub fn sweep_snr(cfg: &ExperimentConfig) -> Result<BerCurve> {
    let jobs: Vec<Job> = cfg
        .schemes
        .iter()
        .flat_map(|&scheme| {
            cfg.snrs.iter().map(move |&snr_db| Job {
                scheme,
                rank: cfg.rank,
                snr_db,
            })
        })
        .collect();
    let outcomes = run_grid(cfg, &jobs)?;
    let mut curve = BerCurve::new("snr_db", cfg);
    for (k, job) in jobs.iter().enumerate() {
        curve.points.push(point(job.scheme, job.snr_db, &outcomes, k));
    }
    Ok(curve)
}

/// BER in consecutive windows of `conv_window` received symbols over the
/// whole packet, training included; the sweep value is the number of
/// symbols received at the end of the window.
pub fn convergence_curve(cfg: &ExperimentConfig) -> Result<BerCurve> {
    let snr_db = cfg.system.snr_db;
    let jobs: Vec<Job> = cfg
        .schemes
        .iter()
        .map(|&scheme| Job {
            scheme,
            rank: cfg.rank,
            snr_db,
        })
        .collect();
    let outcomes = run_grid(cfg, &jobs)?;
    let bits_per_symbol = 2 * cfg.system.n_tx as u64;
    let len = cfg.system.packet_len;
    let mut curve = BerCurve::new("symbols", cfg);
    for (k, job) in jobs.iter().enumerate() {
        let mut start = 0;
        while start < len {
            let end = (start + cfg.conv_window).min(len);
            let bits = bits_per_symbol * (end - start) as u64;
            let bers: Vec<f64> = outcomes
                .iter()
                .map(|run| {
                    let errs: u64 = run[k].error_trace[start..end].iter().map(|&e| e as u64).sum();
                    errs as f64 / bits as f64
                })
                .collect();
            curve.points.push(BerPoint::from_runs(job.scheme, end as f64, &bers, bits));
            start = end;
        }
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            system: SystemConfig {
                n_tx: 2,
                n_rx: 3,
                window_len: 3,
                n_paths: 2,
                packet_len: 200,
                train_len: 80,
                snr_db: 15.0,
                ..SystemConfig::default()
            },
            ranks: vec![1, 2, 3],
            rank: 2,
            snrs: vec![5.0, 20.0],
            n_runs: 4,
            conv_window: 40,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn noiseless_single_path_full_rank_is_error_free() {
        let mut cfg = small();
        cfg.system.n_paths = 1;
        cfg.system.snr_db = 60.0;
        for scheme in Scheme::ALL {
            let out = run_packet(&cfg, scheme, cfg.system.obs_len(), 60.0, 5).unwrap();
            assert_eq!(out.bit_errors, 0, "{scheme}");
            assert_eq!(out.bits, 2 * 2 * 120);
        }
    }

    #[test]
    fn same_seed_same_outcome() {
        let cfg = small();
        let a = run_packet(&cfg, Scheme::Jio, 2, 10.0, 77).unwrap();
        let b = run_packet(&cfg, Scheme::Jio, 2, 10.0, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.error_trace.len(), 200);
    }

    #[test]
    fn noise_is_shared_across_snr_points() {
        let sys = small().system;
        let p = Packet::generate(&sys, 3).unwrap();
        let quiet = p.observations(0.0).unwrap();
        let a = p.observations(0.25).unwrap();
        let b = p.observations(1.0).unwrap();
        for i in 0..10 {
            for r in 0..quiet[i].len() {
                let na = a[i][r] - quiet[i][r];
                let nb = b[i][r] - quiet[i][r];
                assert!((nb - na * 2.0).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_sweep_layout() {
        let cfg = small();
        let curve = sweep_rank(&cfg).unwrap();
        assert_eq!(curve.points.len(), 9);
        let full = curve.series(Scheme::FullRank);
        assert!(full.iter().all(|p| p.ber == full[0].ber));
        assert_eq!(curve.series(Scheme::Jio).iter().map(|p| p.value).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0]);
        assert!(curve.points.iter().all(|p| (0.0..=1.0).contains(&p.ber) && p.bits > 0));
    }

    #[test]
    fn snr_sweep_improves_with_snr() {
        let mut cfg = small();
        cfg.n_runs = 20;
        let curve = sweep_snr(&cfg).unwrap();
        for scheme in Scheme::ALL {
            let s = curve.series(scheme);
            assert!(s[1].ber <= s[0].ber, "{scheme}: {:?}", s);
        }
    }

    #[test]
    fn convergence_windows_cover_packet() {
        let cfg = small();
        let curve = convergence_curve(&cfg).unwrap();
        let jio = curve.series(Scheme::Jio);
        assert_eq!(jio.iter().map(|p| p.value).collect::<Vec<_>>(), vec![40.0, 80.0, 120.0, 160.0, 200.0]);
        assert!(jio.last().unwrap().ber <= jio[0].ber);
    }

    #[test]
    fn empty_requests_are_rejected() {
        let mut cfg = small();
        cfg.n_runs = 0;
        assert!(convergence_curve(&cfg).is_err());
        let mut cfg = small();
        cfg.schemes.clear();
        assert!(sweep_snr(&cfg).is_err());
    }

    #[test]
    fn standard_error_of_runs() {
        let p = BerPoint::from_runs(Scheme::Jio, 1.0, &[0.1, 0.3], 10);
        assert!((p.ber - 0.2).abs() < 1e-15);
        // sample std = sqrt(0.02), divided by sqrt(2)
        assert!((p.stderr - 0.1).abs() < 1e-15);
        assert_eq!(p.bits, 20);
        assert_eq!(BerPoint::from_runs(Scheme::Jio, 1.0, &[0.1], 10).stderr, 0.0);
    }
}
