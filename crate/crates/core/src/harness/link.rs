//! Scenario glue: builds the modulation/pilot/channel stack from a config,
//! simulates received frames, and runs each receiver on them.
//!
//! A single-user scenario is the full-band link (one pilot symbol, one or
//! more data symbols over every subcarrier). Multi-user scenarios allocate
//! contiguous blocks per user, overlay users pairwise beyond the primary
//! set, and superimpose the users' channel-filtered signals at the receive
//! antenna; the detectors then recover user 0.
//!
//! All received grids are AGC-normalized by the measured user's known mean
//! receive amplitude, so detectors see a unit-power channel and noise of
//! variance 1/gamma regardless of where the user landed in the cell.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::allocation::{build_interference_map, InterferenceMap};
use crate::channel::{self, ChannelProfile, ChannelRealization, NoiseSpec};
use crate::elm::{self, ElmBank, ElmConfig};
use crate::error::{Error, Result};
use crate::estimators::{
    equalize_counted, equalize_with, ls_estimate_counted, mmse_estimate_counted, ChannelEstimate,
    CorrelationModel,
};
use crate::flops::FlopCounter;
use crate::harness::config::ExperimentConfig;
use crate::modem::{
    self, demap_symbols, map_bits, FrameLayout, PilotPattern, QamConstellation,
};
use crate::neural::{self, Dataset, MlpModel, TrainConfig};
use crate::numerics::{CMat, RMat, RngStream};

/// Stream-id packing: purpose tag, lane (SNR index or a reserved lane) and
/// trial index. One (seed, purpose, lane, trial) tuple is one independent
/// stream.
pub fn stream_id(purpose: u64, lane: u64, trial: u64) -> u64 {
    (purpose << 56) | ((lane & 0xFFFF) << 40) | (trial & 0xFF_FFFF_FFFF)
}

pub mod purpose {
    pub const BITS: u64 = 1;
    pub const CHANNEL: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const PLACE: u64 = 4;
    pub const PATTERN: u64 = 5;
    pub const DNN_INIT: u64 = 6;
    pub const ELM_PILOT: u64 = 7;
}

/// Reserved lanes that never collide with SNR grid indices.
pub mod lane {
    pub const TRAIN: u64 = 0x4000;
    pub const ELM_BASE: u64 = 0x8000;
    pub const PROBE: u64 = 0xFFFE;
}

/// Everything fixed for the duration of one campaign.
#[derive(Debug, Clone)]
pub struct LinkScenario {
    pub constellation: QamConstellation,
    pub profile: ChannelProfile,
    /// Pilot pattern per user (index 0 is the measured user).
    pub patterns: Vec<PilotPattern>,
    /// Frame layout per user.
    pub layouts: Vec<FrameLayout>,
    pub corr: CorrelationModel,
    pub map: Option<InterferenceMap>,
    pub n_subcarriers: usize,
    pub users: usize,
    pub total_power: f64,
    pub seed: u64,
}

impl LinkScenario {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let s = &cfg.system;
        let constellation = QamConstellation::new(s.modulation)?;
        let mut profile = ChannelProfile::exponential(cfg.channel.taps, cfg.channel.decay_db);
        profile.path_loss_exp = cfg.channel.path_loss_exp;
        profile.cell_radius_m = cfg.channel.cell_radius_m;
        profile.exclusion_radius_m = cfg.channel.exclusion_radius_m;
        profile.coherence_ms = cfg.channel.coherence_ms;

        let total_power = cfg.total_power();
        let mut patterns = Vec::new();
        let mut layouts = Vec::new();
        let map = if s.users == 1 {
            let mut rng = RngStream::new(cfg.seed, stream_id(purpose::PATTERN, 0, 0));
            let pattern = if s.pilots == s.subcarriers {
                PilotPattern::block(s.subcarriers, &mut rng)
            } else {
                PilotPattern::comb(s.subcarriers, s.pilots, &mut rng)?
            };
            patterns.push(pattern);
            layouts.push(FrameLayout::full_band(
                s.subcarriers,
                s.cp_fraction,
                s.data_symbols,
                total_power,
            ));
            None
        } else {
            let map = build_interference_map(
                s.users,
                s.subcarriers,
                cfg.allocation.subcarriers_per_user,
            )?;
            for u in 0..s.users {
                let block: Vec<usize> = map.allocation(u).collect();
                let mut rng = RngStream::new(cfg.seed, stream_id(purpose::PATTERN, 0, u as u64));
                patterns.push(PilotPattern::subset(s.subcarriers, block.clone(), &mut rng));
                let amplitude = (total_power / block.len() as f64).sqrt();
                layouts.push(FrameLayout {
                    n_subcarriers: s.subcarriers,
                    cp_fraction: s.cp_fraction,
                    data_symbols: s.data_symbols,
                    data_indices: block,
                    amplitude,
                });
            }
            Some(map)
        };
        let corr = CorrelationModel::analytic(&profile, s.subcarriers, &patterns[0]);
        Ok(Self {
            constellation,
            profile,
            patterns,
            layouts,
            corr,
            map,
            n_subcarriers: s.subcarriers,
            users: s.users,
            total_power,
            seed: cfg.seed,
        })
    }

    /// Mean receive power per subcarrier for a user at distance `d`.
    pub fn receive_power(&self, user: usize, d: f64) -> f64 {
        self.profile.gain(d) * self.total_power / self.layouts[user].data_indices.len() as f64
    }

    pub fn payload_bits(&self) -> usize {
        self.layouts[0].payload_bits(&self.constellation)
    }

    /// True when the cyclic prefix covers the channel memory, enabling the
    /// per-subcarrier frequency-domain fast path.
    pub fn circular(&self) -> bool {
        self.layouts[0].cp_len() + 1 >= self.profile.taps()
    }
}

/// One simulated transmission as the receiver sees it.
#[derive(Debug, Clone)]
pub struct SimulatedFrame {
    /// Receiver-normalized grid: (1 + data_symbols) x N_c.
    pub rx_grid: CMat,
    /// Unit-power frequency response of the measured user.
    pub unit_freq: Vec<Complex64>,
    /// Payload bits of the measured user.
    pub bits: Vec<u8>,
}

/// Per-trial stream bundle.
pub struct TrialStreams {
    pub bits: RngStream,
    pub channel: RngStream,
    pub noise: RngStream,
    pub place: RngStream,
}

impl TrialStreams {
    pub fn new(seed: u64, lane_id: u64, trial: u64) -> Self {
        Self {
            bits: RngStream::new(seed, stream_id(purpose::BITS, lane_id, trial)),
            channel: RngStream::new(seed, stream_id(purpose::CHANNEL, lane_id, trial)),
            noise: RngStream::new(seed, stream_id(purpose::NOISE, lane_id, trial)),
            place: RngStream::new(seed, stream_id(purpose::PLACE, lane_id, trial)),
        }
    }
}

fn random_bits(rng: &mut RngStream, n: usize) -> Vec<u8> {
    (0..n).map(|_| (rng.next_u64() & 1) as u8).collect()
}

/// Simulate one frame through placement, fading, superposition and noise.
pub fn simulate_frame(
    sc: &LinkScenario,
    snr_db: f64,
    streams: &mut TrialStreams,
) -> Result<SimulatedFrame> {
    let distances = channel::place_users(&sc.profile, sc.users, &mut streams.place);
    let real = channel::draw_realization(
        &sc.profile,
        &distances,
        sc.n_subcarriers,
        &mut streams.channel,
    )?;
    let mut frames = Vec::with_capacity(sc.users);
    for u in 0..sc.users {
        let bits = random_bits(&mut streams.bits, sc.layouts[u].payload_bits(&sc.constellation));
        frames.push(modem::build_frame(
            &bits,
            &sc.patterns[u],
            &sc.constellation,
            &sc.layouts[u],
        )?);
    }
    let rx_grid = receive_grid(sc, snr_db, &frames, &real, &mut streams.noise)?;
    Ok(SimulatedFrame {
        rx_grid,
        unit_freq: real.unit_freq(0).to_vec(),
        bits: frames[0].payload().to_vec(),
    })
}

/// Propagate the frames and return the AGC-normalized received grid.
fn receive_grid(
    sc: &LinkScenario,
    snr_db: f64,
    frames: &[modem::OfdmFrame],
    real: &ChannelRealization,
    noise_rng: &mut RngStream,
) -> Result<CMat> {
    let symbols = frames[0].grid().rows();
    let n = sc.n_subcarriers;
    let gain0 = real.gain(0);
    if sc.circular() {
        // Per-subcarrier model in normalized units: noise variance 1/gamma.
        let noise = NoiseSpec::from_snr_db(snr_db, 1.0)?;
        let mut grid = CMat::zeros(symbols, n);
        for s in 0..symbols {
            for k in 0..n {
                let mut acc = noise_rng.complex_gaussian(noise.variance());
                for u in 0..sc.users {
                    let rel = (real.gain(u) / gain0).sqrt();
                    acc += frames[u].grid()[(s, k)] * real.unit_freq(u)[k] * rel;
                }
                grid[(s, k)] = acc;
            }
        }
        Ok(grid)
    } else {
        // Full time-domain path: linear convolution keeps the inter-symbol
        // leakage the missing prefix no longer absorbs. The link streams in
        // steady state, so one preceding data symbol (the previous frame's
        // tail) is prepended per user and its received span discarded;
        // without it the pilot symbol would start from artificial silence
        // and see none of the inter-frame interference.
        let p_rx = sc.receive_power(0, real.distance(0));
        let noise = NoiseSpec::from_snr_db(snr_db, p_rx)?;
        let layout0 = &sc.layouts[0];
        let prelude = layout0.cp_len() + n;
        let span = prelude + layout0.samples();
        let mut sum = vec![Complex64::new(0.0, 0.0); span + sc.profile.taps() - 1];
        for u in 0..sc.users {
            let mut time = preceding_symbol(sc, u, noise_rng)?;
            time.extend(modem::to_time_domain(&frames[u])?);
            let filtered = channel::filter_time(real, u, &time)?;
            for (acc, v) in sum.iter_mut().zip(filtered) {
                *acc += v;
            }
        }
        channel::add_noise(&mut sum, &noise, noise_rng);
        let mut grid = modem::strip_cp_and_dft(&sum[prelude..], layout0)?;
        grid.scale(1.0 / gain0.sqrt());
        Ok(grid)
    }
}

/// One random data OFDM symbol standing in for the previous frame's tail.
fn preceding_symbol(
    sc: &LinkScenario,
    user: usize,
    rng: &mut RngStream,
) -> Result<Vec<Complex64>> {
    let layout = &sc.layouts[user];
    let n = sc.n_subcarriers;
    let mut row = CMat::zeros(1, n);
    for &k in &layout.data_indices {
        let label = rng.below(sc.constellation.order() as u64) as usize;
        row[(0, k)] = sc.constellation.point_for_label(label);
    }
    modem::symbols_to_time(&row, layout.cp_len(), layout.amplitude)
}

/// NMSE bookkeeping: error and truth energies of one estimate.
#[derive(Debug, Clone, Copy, Default)]
pub struct NmseSample {
    pub err: f64,
    pub energy: f64,
}

impl NmseSample {
    pub fn from_estimate(truth: &[Complex64], est: &ChannelEstimate) -> Self {
        let mut err = 0.0;
        let mut energy = 0.0;
        for (h, e) in truth.iter().zip(est.values()) {
            err += (h - e).norm_sqr();
            energy += h.norm_sqr();
        }
        Self { err, energy }
    }
}

fn extract(row: &[Complex64], idx: &[usize]) -> Vec<Complex64> {
    idx.iter().map(|&k| row[k]).collect()
}

/// Equalize the data symbols against `h` and demap, in payload-bit order.
fn equalize_and_demap(sc: &LinkScenario, frame: &SimulatedFrame, h: &[Complex64]) -> Vec<u8> {
    let layout = &sc.layouts[0];
    let mut bits = Vec::with_capacity(sc.payload_bits());
    let h_data = extract(h, &layout.data_indices);
    for s in 1..frame.rx_grid.rows() {
        let y_data = extract(frame.rx_grid.row(s), &layout.data_indices);
        let (eq, _) = equalize_with(&y_data, &h_data);
        bits.extend(demap_symbols(&eq, &sc.constellation));
    }
    bits
}

/// Matched-filter detection with the true channel.
pub fn detect_perfect(sc: &LinkScenario, frame: &SimulatedFrame) -> Vec<u8> {
    equalize_and_demap(sc, frame, &frame.unit_freq)
}

/// LS estimation, equalization, hard demap. Also returns the NMSE sample.
pub fn detect_ls(sc: &LinkScenario, frame: &SimulatedFrame) -> Result<(Vec<u8>, NmseSample)> {
    let est = crate::estimators::ls_estimate(frame.rx_grid.row(0), &sc.patterns[0])?;
    let nmse = NmseSample::from_estimate(&frame.unit_freq, &est);
    Ok((equalize_and_demap(sc, frame, est_values(&est)), nmse))
}

/// MMSE (Wiener-filtered LS) estimation, equalization, hard demap.
pub fn detect_mmse(
    sc: &LinkScenario,
    frame: &SimulatedFrame,
    snr_db: f64,
) -> Result<(Vec<u8>, NmseSample)> {
    let ls = crate::estimators::ls_estimate(frame.rx_grid.row(0), &sc.patterns[0])?;
    let gamma = 10f64.powf(snr_db / 10.0);
    let est = crate::estimators::mmse_estimate(&ls, &sc.corr, gamma)?;
    let nmse = NmseSample::from_estimate(&frame.unit_freq, &est);
    Ok((equalize_and_demap(sc, frame, est_values(&est)), nmse))
}

fn est_values(est: &ChannelEstimate) -> &[Complex64] {
    est.values()
}

/// The MLP receiver: one instance per contiguous subcarrier group, each
/// mapping the whole received frame to that group's bits.
#[derive(Debug, Clone)]
pub struct DnnDetector {
    pub instances: Vec<MlpModel>,
    /// Subcarriers covered per instance.
    pub group: usize,
    pub snr_train_db: f64,
}

impl DnnDetector {
    /// Group size from the configured output cap: an instance covers
    /// min(output_neurons / bits_per_symbol, data subcarriers).
    pub fn group_for(sc: &LinkScenario, output_neurons: usize) -> usize {
        let data_sc = sc.layouts[0].data_indices.len();
        (output_neurons / sc.constellation.bits_per_symbol()).min(data_sc)
    }

    pub fn instances_for(sc: &LinkScenario, group: usize) -> usize {
        sc.layouts[0].data_indices.len().div_ceil(group)
    }
}

/// Forward every instance and assemble the payload decision.
pub fn detect_dnn(
    sc: &LinkScenario,
    frame: &SimulatedFrame,
    det: &DnnDetector,
) -> Result<Vec<u8>> {
    let features = neural::frame_features(&frame.rx_grid);
    let bps = sc.constellation.bits_per_symbol();
    let data_sc = sc.layouts[0].data_indices.len();
    let mut bits = vec![0u8; sc.payload_bits()];
    for (g, model) in det.instances.iter().enumerate() {
        let start_sc = g * det.group;
        let end_sc = (start_sc + det.group).min(data_sc);
        let decided = model.detect(&features)?;
        let span = (end_sc - start_sc) * bps;
        bits[start_sc * bps..start_sc * bps + span].copy_from_slice(&decided[..span]);
    }
    Ok(bits)
}

/// Labels of one training frame for instance `g`: the group's payload bits.
fn instance_labels(sc: &LinkScenario, bits: &[u8], g: usize, group: usize) -> Vec<f64> {
    let bps = sc.constellation.bits_per_symbol();
    let data_sc = sc.layouts[0].data_indices.len();
    let start = g * group * bps;
    let end = ((g + 1) * group * bps).min(data_sc * bps);
    bits[start..end].iter().map(|&b| b as f64).collect()
}

/// Generate the offline training set at `snr_train_db` (optionally spread
/// uniformly over +- `spread_db`): features shared by all instances, one
/// label matrix per instance.
pub fn generate_dnn_dataset(
    sc: &LinkScenario,
    snr_train_db: f64,
    n_examples: usize,
    group: usize,
) -> Result<(RMat, Vec<RMat>)> {
    generate_dnn_dataset_spread(sc, snr_train_db, 0.0, n_examples, group)
}

pub fn generate_dnn_dataset_spread(
    sc: &LinkScenario,
    snr_train_db: f64,
    spread_db: f64,
    n_examples: usize,
    group: usize,
) -> Result<(RMat, Vec<RMat>)> {
    assert!(n_examples > 0);
    let instances = DnnDetector::instances_for(sc, group);
    let width = neural::feature_width(1 + sc.layouts[0].data_symbols, sc.n_subcarriers);
    let bps = sc.constellation.bits_per_symbol();
    let rows: Result<Vec<(Vec<f64>, Vec<Vec<f64>>)>> = (0..n_examples)
        .into_par_iter()
        .map(|e| {
            let mut streams = TrialStreams::new(sc.seed, lane::TRAIN, e as u64);
            let snr = if spread_db > 0.0 {
                snr_train_db - spread_db + 2.0 * spread_db * streams.place.uniform()
            } else {
                snr_train_db
            };
            let frame = simulate_frame(sc, snr, &mut streams)?;
            let features = neural::frame_features(&frame.rx_grid);
            let labels = (0..instances)
                .map(|g| instance_labels(sc, &frame.bits, g, group))
                .collect();
            Ok((features, labels))
        })
        .collect();
    let rows = rows?;
    let mut features = RMat::zeros(n_examples, width);
    let mut labels: Vec<RMat> = (0..instances)
        .map(|g| {
            let cols = ((g + 1) * group * bps).min(sc.payload_bits()) - g * group * bps;
            RMat::zeros(n_examples, cols)
        })
        .collect();
    for (r, (f, ls)) in rows.into_iter().enumerate() {
        features.row_mut(r).copy_from_slice(&f);
        for (g, l) in ls.into_iter().enumerate() {
            labels[g].row_mut(r).copy_from_slice(&l);
        }
    }
    Ok((features, labels))
}

/// Full offline training of the MLP receiver from a config.
pub struct DnnTrainOutput {
    pub detector: DnnDetector,
    pub loss_curves: Vec<Vec<f64>>,
}

pub fn train_dnn_detector(
    sc: &LinkScenario,
    dnn: &crate::harness::config::DnnConfig,
) -> Result<DnnTrainOutput> {
    let group = DnnDetector::group_for(sc, dnn.output_neurons);
    let (features, labels) = generate_dnn_dataset_spread(
        sc,
        dnn.snr_train_db,
        dnn.snr_train_spread_db,
        dnn.dataset_size,
        group,
    )?;
    let width = features.cols();
    let tcfg = TrainConfig {
        epochs: dnn.epochs,
        batch_size: dnn.batch_size.min(dnn.dataset_size),
        learning_rate: dnn.learning_rate,
        beta1: dnn.beta1,
        beta2: dnn.beta2,
        epsilon: dnn.epsilon,
        seed: sc.seed,
    };
    let mut instances = Vec::new();
    let mut loss_curves = Vec::new();
    for (g, label) in labels.iter().enumerate() {
        let mut rng = RngStream::new(sc.seed, stream_id(purpose::DNN_INIT, g as u64, 0));
        let mut model = MlpModel::detector(width, &dnn.hidden, label.cols(), &mut rng);
        let data = Dataset {
            features: features.clone(),
            labels: label.clone(),
        };
        let curve = neural::train(&mut model, &data, &tcfg)?;
        instances.push(model);
        loss_curves.push(curve);
    }
    Ok(DnnTrainOutput {
        detector: DnnDetector {
            instances,
            group,
            snr_train_db: dnn.snr_train_db,
        },
        loss_curves,
    })
}

/// One ELM coherence block: I pilot symbols then K data symbols over the
/// full band, one channel draw, per-subcarrier closed-form retraining.
pub struct ElmBlockOutcome {
    pub errors: u64,
    pub bits: u64,
}

pub fn run_elm_block(
    sc: &LinkScenario,
    elm_cfg: &ElmConfig,
    bank: &mut ElmBank,
    snr_db: f64,
    lane_id: u64,
    trial: u64,
    mut counter: Option<&mut FlopCounter>,
) -> Result<ElmBlockOutcome> {
    let mut streams = TrialStreams::new(sc.seed, lane_id, trial);
    let mut pilot_rng = RngStream::new(sc.seed, stream_id(purpose::ELM_PILOT, lane_id, trial));
    let n = sc.n_subcarriers;
    let i_pilots = elm_cfg.pilots;
    let k_data = elm_cfg.data;
    let symbols = i_pilots + k_data;
    let c = &sc.constellation;
    let bps = c.bits_per_symbol();

    // Transmit grid: pilot symbols are known random constellation points,
    // data symbols carry fresh payload bits.
    let mut grid = CMat::zeros(symbols, n);
    for s in 0..i_pilots {
        for k in 0..n {
            let label = pilot_rng.below(c.order() as u64) as usize;
            grid[(s, k)] = c.point_for_label(label);
        }
    }
    let data_bits = random_bits(&mut streams.bits, k_data * n * bps);
    let data_symbols_flat = map_bits(&data_bits, c)?;
    for s in 0..k_data {
        for k in 0..n {
            grid[(i_pilots + s, k)] = data_symbols_flat[s * n + k];
        }
    }

    let distances = channel::place_users(&sc.profile, 1, &mut streams.place);
    let real = channel::draw_realization(&sc.profile, &distances, n, &mut streams.channel)?;
    let layout = &sc.layouts[0];
    let amplitude = layout.amplitude;
    let rx = if sc.circular() {
        let noise = NoiseSpec::from_snr_db(snr_db, 1.0)?;
        let h = real.unit_freq(0);
        let mut rx = CMat::zeros(symbols, n);
        for s in 0..symbols {
            for k in 0..n {
                rx[(s, k)] =
                    grid[(s, k)] * h[k] + streams.noise.complex_gaussian(noise.variance());
            }
        }
        rx
    } else {
        let p_rx = sc.receive_power(0, real.distance(0));
        let noise = NoiseSpec::from_snr_db(snr_db, p_rx)?;
        let prelude = layout.cp_len() + n;
        let mut time = preceding_symbol(sc, 0, &mut streams.noise)?;
        time.extend(modem::symbols_to_time(&grid, layout.cp_len(), amplitude)?);
        let mut y = channel::filter_time(&real, 0, &time)?;
        channel::add_noise(&mut y, &noise, &mut streams.noise);
        let mut rx = modem::time_to_symbols(&y[prelude..], n, layout.cp_len(), symbols, amplitude)?;
        rx.scale(1.0 / real.gain(0).sqrt());
        rx
    };

    // Per-subcarrier pilot and data blocks as [Re, Im] rows.
    let mut rx_pilots = Vec::with_capacity(n);
    let mut tx_pilots = Vec::with_capacity(n);
    let mut rx_data = Vec::with_capacity(n);
    for k in 0..n {
        let mut rp = RMat::zeros(i_pilots, 2);
        let mut tp = RMat::zeros(i_pilots, 2);
        for s in 0..i_pilots {
            rp[(s, 0)] = rx[(s, k)].re;
            rp[(s, 1)] = rx[(s, k)].im;
            tp[(s, 0)] = grid[(s, k)].re;
            tp[(s, 1)] = grid[(s, k)].im;
        }
        let mut rd = RMat::zeros(k_data, 2);
        for s in 0..k_data {
            rd[(s, 0)] = rx[(i_pilots + s, k)].re;
            rd[(s, 1)] = rx[(i_pilots + s, k)].im;
        }
        rx_pilots.push(rp);
        tx_pilots.push(tp);
        rx_data.push(rd);
    }

    if let Some(cnt) = counter.as_deref_mut() {
        // Counted sequential path (the probe measures work, not wall time).
        for k in 0..n {
            let subnet = bank.subnet_mut(k);
            elm::train_subnet_counted(subnet, &rx_pilots[k], &tx_pilots[k], elm_cfg.normalize, Some(cnt))?;
        }
    } else {
        bank.train(&rx_pilots, &tx_pilots)?;
    }

    let mut errors = 0u64;
    for k in 0..n {
        let detected = if let Some(cnt) = counter.as_deref_mut() {
            elm::detect_subnet_counted(bank.subnet(k), &rx_data[k], Some(cnt))?
        } else {
            elm::detect_subnet(bank.subnet(k), &rx_data[k])?
        };
        let symbols_out = elm::rows_to_symbols(&detected);
        let decided = demap_symbols(&symbols_out, c);
        for s in 0..k_data {
            let true_slice = &data_bits[(s * n + k) * bps..(s * n + k + 1) * bps];
            let got = &decided[s * bps..(s + 1) * bps];
            errors += true_slice
                .iter()
                .zip(got)
                .filter(|(a, b)| a != b)
                .count() as u64;
        }
    }
    Ok(ElmBlockOutcome {
        errors,
        bits: (k_data * n * bps) as u64,
    })
}

/// Per-frame operation count of one detector on a deterministic probe
/// frame. The DNN count is analytic (dense MACs); the others are executed
/// counts.
pub fn probe_detector_flops(
    sc: &LinkScenario,
    elm_cfg: &ElmConfig,
    dnn: Option<&DnnDetector>,
    detector: &str,
    snr_db: f64,
) -> Result<u64> {
    let mut counter = FlopCounter::new();
    match detector {
        "theory" => {}
        "perfect" | "ls" | "mmse" => {
            let mut streams = TrialStreams::new(sc.seed, lane::PROBE, 0);
            let frame = simulate_frame(sc, snr_db, &mut streams)?;
            let layout = &sc.layouts[0];
            match detector {
                "perfect" => {
                    for s in 1..frame.rx_grid.rows() {
                        counter.complex_div += layout.data_indices.len() as u64;
                        let _ = s;
                    }
                }
                "ls" => {
                    let est =
                        ls_estimate_counted(frame.rx_grid.row(0), &sc.patterns[0], Some(&mut counter))?;
                    for s in 1..frame.rx_grid.rows() {
                        let y = extract(frame.rx_grid.row(s), &layout.data_indices);
                        equalize_counted(&y, &est, &mut counter);
                    }
                }
                _ => {
                    let ls = ls_estimate_counted(
                        frame.rx_grid.row(0),
                        &sc.patterns[0],
                        Some(&mut counter),
                    )?;
                    let gamma = 10f64.powf(snr_db / 10.0);
                    let est = mmse_estimate_counted(&ls, &sc.corr, gamma, Some(&mut counter))?;
                    for s in 1..frame.rx_grid.rows() {
                        let y = extract(frame.rx_grid.row(s), &layout.data_indices);
                        equalize_counted(&y, &est, &mut counter);
                    }
                }
            }
        }
        "dnn" => {
            if let Some(det) = dnn {
                for model in &det.instances {
                    let sizes = model.layer_sizes();
                    for l in 0..sizes.len() - 1 {
                        counter.real_mul += (sizes[l] * sizes[l + 1]) as u64;
                        counter.real_add += (sizes[l] * sizes[l + 1] + sizes[l + 1]) as u64;
                        counter.activation += sizes[l + 1] as u64;
                    }
                }
            }
        }
        "elm" => {
            let mut bank = ElmBank::new(sc.n_subcarriers, *elm_cfg, sc.seed);
            run_elm_block(sc, elm_cfg, &mut bank, snr_db, lane::PROBE, 0, Some(&mut counter))?;
        }
        other => return Err(Error::Config(format!("unknown detector '{other}'"))),
    }
    Ok(counter.total_flops())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;

    fn small_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.run.trials = 10;
        cfg
    }

    #[test]
    fn scenario_builds_from_default_config() {
        let sc = LinkScenario::from_config(&small_cfg()).unwrap();
        assert_eq!(sc.n_subcarriers, 64);
        assert_eq!(sc.payload_bits(), 128);
        assert!(sc.circular());
    }

    #[test]
    fn simulated_frame_has_unit_scale_statistics() {
        let sc = LinkScenario::from_config(&small_cfg()).unwrap();
        let mut energy = 0.0;
        let trials = 400;
        for t in 0..trials {
            let mut streams = TrialStreams::new(sc.seed, 0, t);
            let frame = simulate_frame(&sc, 25.0, &mut streams).unwrap();
            // Data symbol power ~ E|H|^2 E|X|^2 + 1/gamma ~ 1.003
            energy += frame
                .rx_grid
                .row(1)
                .iter()
                .map(|v| v.norm_sqr())
                .sum::<f64>()
                / 64.0;
        }
        let mean = energy / trials as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean normalized power {mean}");
    }

    #[test]
    fn perfect_detector_is_error_free_at_high_snr() {
        let sc = LinkScenario::from_config(&small_cfg()).unwrap();
        let mut errors = 0;
        for t in 0..50 {
            let mut streams = TrialStreams::new(sc.seed, 1, t);
            let frame = simulate_frame(&sc, 60.0, &mut streams).unwrap();
            let bits = detect_perfect(&sc, &frame);
            errors += crate::harness::metrics::count_bit_errors(&bits, &frame.bits);
        }
        assert_eq!(errors, 0);
    }

    #[test]
    fn time_and_frequency_paths_agree_without_noise() {
        // Compare the two receive paths on identical frames by silencing
        // the noise (SNR so high the difference is negligible) and using
        // the same channel draw.
        let mut cfg = small_cfg();
        cfg.system.cp_fraction = 0.25;
        let sc = LinkScenario::from_config(&cfg).unwrap();
        let mut streams = TrialStreams::new(sc.seed, 2, 0);
        let distances = channel::place_users(&sc.profile, 1, &mut streams.place);
        let real =
            channel::draw_realization(&sc.profile, &distances, 64, &mut streams.channel).unwrap();
        let bits = random_bits(&mut streams.bits, sc.payload_bits());
        let frame =
            modem::build_frame(&bits, &sc.patterns[0], &sc.constellation, &sc.layouts[0]).unwrap();

        // Frequency path, no noise.
        let mut fast = CMat::zeros(2, 64);
        for s in 0..2 {
            for k in 0..64 {
                fast[(s, k)] = frame.grid()[(s, k)] * real.unit_freq(0)[k];
            }
        }
        // Time path, no noise.
        let time = modem::to_time_domain(&frame).unwrap();
        let filtered = channel::filter_time(&real, 0, &time).unwrap();
        let mut slow = modem::strip_cp_and_dft(&filtered, &sc.layouts[0]).unwrap();
        slow.scale(1.0 / real.gain(0).sqrt());

        let err = fast.sub(&slow).unwrap().max_abs();
        assert!(err < 1e-10, "paths differ by {err}");
    }

    #[test]
    fn multiuser_frames_superimpose_partners() {
        let mut cfg = small_cfg();
        cfg.system.users = 8;
        let sc = LinkScenario::from_config(&cfg).unwrap();
        assert_eq!(sc.payload_bits(), 32); // 16 subcarriers, 2 bits each
        let mut streams = TrialStreams::new(sc.seed, 3, 0);
        let frame = simulate_frame(&sc, 20.0, &mut streams).unwrap();
        assert_eq!(frame.rx_grid.rows(), 2);
        // Every subcarrier carries someone's signal.
        let power: f64 = frame.rx_grid.row(1).iter().map(|v| v.norm_sqr()).sum();
        assert!(power > 0.0);
    }

    #[test]
    fn dnn_detector_geometry() {
        let sc = LinkScenario::from_config(&small_cfg()).unwrap();
        let group = DnnDetector::group_for(&sc, 64);
        assert_eq!(group, 32);
        assert_eq!(DnnDetector::instances_for(&sc, group), 2);
    }

    #[test]
    fn dataset_rows_align_features_and_labels() {
        let sc = LinkScenario::from_config(&small_cfg()).unwrap();
        let (features, labels) = generate_dnn_dataset(&sc, 20.0, 8, 32).unwrap();
        assert_eq!(features.rows(), 8);
        assert_eq!(features.cols(), 256);
        assert_eq!(labels.len(), 2);
        assert_eq!(labels[0].cols(), 64);
        // Regenerating gives identical bytes (seeded streams).
        let (f2, l2) = generate_dnn_dataset(&sc, 20.0, 8, 32).unwrap();
        assert_eq!(features.data(), f2.data());
        assert_eq!(labels[1].data(), l2[1].data());
    }

    #[test]
    fn elm_block_runs_and_counts_bits() {
        let mut cfg = small_cfg();
        cfg.system.subcarriers = 8;
        cfg.system.pilots = 8;
        let sc = LinkScenario::from_config(&cfg).unwrap();
        let elm_cfg = ElmConfig {
            hidden: 20,
            pilots: 40,
            data: 20,
            normalize: true,
        };
        let mut bank = ElmBank::new(8, elm_cfg, sc.seed);
        let out = run_elm_block(&sc, &elm_cfg, &mut bank, 25.0, lane::ELM_BASE, 0, None).unwrap();
        assert_eq!(out.bits, 20 * 8 * 2);
        assert!(out.errors < out.bits / 4, "ELM errors {}", out.errors);
    }
}
