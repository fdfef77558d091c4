use afdm_cs::channel::{apply_channel_noiseless, sample_profile, SparsityConfig, SparsityModel};
use afdm_cs::daft::{cpp_extend, select_chirp_rate, AfdmParams, ChirpSign, Daft};
use afdm_cs::harness::ExperimentConfig;
use afdm_cs::hihtp::{hihtp_recover, HierarchicalLevels};
use afdm_cs::linalg::{norm, sub};
use afdm_cs::rng::stream;
use afdm_cs::sensing::{
    build_measurement_operator, build_pilot_frame, extract_measurements, OverlapMode, PilotScheme,
};
use afdm_cs::subnyquist::SubNyquistReceiver;
use afdm_cs::C64;
use rand::Rng;

fn reference_channel() -> SparsityConfig {
    SparsityConfig::new(SparsityModel::Type1, 30, 7, 0.2, 0.2).unwrap()
}

#[test]
fn reduced_overlap_frame_with_data_matches_the_operator() {
    let sparsity = SparsityConfig::new(SparsityModel::Type2, 6, 2, 0.4, 0.3).unwrap();
    let grid = sparsity.grid();
    let params = AfdmParams::new(512, 2)
        .unwrap()
        .with_c1_sign(ChirpSign::Negative)
        .with_c2(0.05)
        .with_cpp_len(5);
    let scheme = PilotScheme::uniform_with(12, OverlapMode::Reduced, &params, grid).unwrap();
    let op = build_measurement_operator(&scheme, &params, grid).unwrap();
    let daft = Daft::new(&params).unwrap();
    for t in 0..20 {
        let mut rng = stream(41, t, 0);
        // QAM-like data everywhere; the frame builder clears reserved bins.
        let data: Vec<C64> = (0..512)
            .map(|_| {
                C64::new(
                    if rng.random() { 1.0 } else { -1.0 },
                    if rng.random() { 1.0 } else { -1.0 },
                )
            })
            .collect();
        let frame = build_pilot_frame(&scheme, &params, grid, Some(&data)).unwrap();
        let profile = sample_profile(&sparsity, &mut rng).unwrap();
        let s = cpp_extend(&daft.modulate(&frame).unwrap(), &params).unwrap();
        let r = apply_channel_noiseless(&s, &profile, &params).unwrap();
        let y = extract_measurements(&daft.demodulate(&r).unwrap(), op.rows()).unwrap();
        let model = op.apply(&profile.vectorize()).unwrap();
        let scale = norm(&model).max(1e-300);
        assert!(norm(&sub(&y, &model)) <= 1e-9 * scale.max(1.0), "trial {t}");
    }
}

#[test]
fn noise_free_recovery_at_reference_scale_is_exact_within_levels() {
    let sparsity = reference_channel();
    let grid = sparsity.grid();
    let p = select_chirp_rate(
        30,
        7,
        sparsity.mean_delay_sparsity(),
        sparsity.mean_doppler_sparsity(),
    )
    .unwrap();
    let params = AfdmParams::new(4096, p).unwrap().with_cpp_len(29);
    let scheme = PilotScheme::uniform(32, &params, grid).unwrap();
    let op = build_measurement_operator(&scheme, &params, grid).unwrap();
    let daft = Daft::new(&params).unwrap();
    let frame = build_pilot_frame(&scheme, &params, grid, None).unwrap();
    let s = cpp_extend(&daft.modulate(&frame).unwrap(), &params).unwrap();
    let lv = HierarchicalLevels::new(
        30,
        15,
        sparsity.delay_sparsity(),
        sparsity.doppler_sparsity(),
    )
    .unwrap();

    let mut hits = 0;
    let mut within_levels = 0;
    for t in 0..20 {
        let profile = sample_profile(&sparsity, &mut stream(42, t, 0)).unwrap();
        let alpha = profile.vectorize();
        let per_tap = profile
            .mask()
            .chunks(15)
            .map(|b| b.iter().filter(|&&a| a).count())
            .max()
            .unwrap_or(0);
        let fits = profile.nonzero_blocks() <= lv.s_d && per_tap <= lv.s_dd;
        let r = apply_channel_noiseless(&s, &profile, &params).unwrap();
        let y = extract_measurements(&daft.demodulate(&r).unwrap(), op.rows()).unwrap();
        let hat = hihtp_recover(op.matrix(), &y, &lv, 20).unwrap().alpha_hat;
        if fits {
            within_levels += 1;
            if norm(&sub(&hat, &alpha)) <= 1e-9 * norm(&alpha) {
                hits += 1;
            }
        }
    }
    assert!(within_levels >= 15);
    assert_eq!(hits, within_levels, "{hits} of {within_levels} recovered");
}

#[test]
fn subnyquist_chain_at_reference_scale() {
    let sparsity = reference_channel();
    let grid = sparsity.grid();
    let params = AfdmParams::new(4096, 1).unwrap().with_cpp_len(29);
    let scheme = PilotScheme::contiguous(16, OverlapMode::Disjoint, &params, grid, 100).unwrap();
    let op = build_measurement_operator(&scheme, &params, grid).unwrap();
    let rx = SubNyquistReceiver::new(&scheme, &params, grid).unwrap();
    assert_eq!(rx.rows().len(), 16 * 44);
    let daft = Daft::new(&params).unwrap();
    let frame = build_pilot_frame(&scheme, &params, grid, None).unwrap();
    let s = cpp_extend(&daft.modulate(&frame).unwrap(), &params).unwrap();
    for t in 0..5 {
        let profile = sample_profile(&sparsity, &mut stream(43, t, 0)).unwrap();
        let r = apply_channel_noiseless(&s, &profile, &params).unwrap();
        let full = extract_measurements(&daft.demodulate(&r).unwrap(), op.rows()).unwrap();
        let low = rx.receive(&r, &frame).unwrap();
        assert!(norm(&sub(&low, &full)) <= 1e-9 * norm(&full).max(1.0));
    }
}

#[test]
fn shipped_config_resolves() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/reference.toml");
    let cfg = ExperimentConfig::from_path(path.as_ref()).unwrap();
    cfg.validate().unwrap();
    let r = cfg.resolve().unwrap();
    assert_eq!(r.params.n(), 4096);
    assert_eq!(r.params.p(), 1);
    assert_eq!((r.levels.s_d, r.levels.s_dd), (9, 5));
    assert_eq!(cfg.pilots.n_pilots, vec![4, 8, 16, 24, 32, 48, 64]);
    assert_eq!(cfg.snr_db.len(), 7);
}
