//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use waveplanes::codec::{compress_model, decompress_model, plane_stats, threshold_coeffs, Backend};
use waveplanes::data::{evaluate, gen_synthetic, psnr, Blob, Dataset, SyntheticSceneSpec};
use waveplanes::field::{fuse_hp, fuse_zam, fuse_zmm, refresh_cache, Fusion, ModelConfig, PlaneId, WaveletField};
use waveplanes::optim::{reg_sst, reg_time_smooth, reg_ts, reg_tv, RegWeights, StepLog, TrainConfig, Trainer};
use waveplanes::render::{
    composite, look_at, render_image, trace_ray, Background, Camera, ColorBasisDecoder, RenderOptions,
};
use waveplanes::wavelets::{dwt2, idwt2, Grid, PyramidShape, WaveletFamily};
use waveplanes::WavePlanesError;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn wavelet_round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(101);
    let (mut cases, mut worst) = (0, 0.0f64);
    let sizes = [8, 16, 32, 64];
    for family in WaveletFamily::ALL {
        for &h in &sizes {
            for &w in &sizes {
                for levels in 1..=3 {
                    let x = common::random_grid(&mut rng, 3, h, w);
                    let c = match dwt2(&x, levels, family) {
                        Ok(c) => c,
                        Err(WavePlanesError::Level(_)) => continue,
                        Err(e) => return Err(format!("{family} {h}x{w} N={levels}: {e}")),
                    };
                    let y = idwt2(&c, levels, family).map_err(|e| e.to_string())?;
                    let err = x.data.iter().zip(&y.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    worst = worst.max(err);
                    cases += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-5, || format!("max error {worst:e}"))?;
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{cases} cases over {} families, max error {worst:.2e}, {:.2?}",
        WaveletFamily::ALL.len(),
        elapsed
    ))
}

fn partial_shapes() -> Outcome {
    let shape = PyramidShape::new(2, 2, 16, 16).map_err(|e| e.to_string())?;
    let c = dwt2(&Grid::zeros(2, 16, 16), 2, WaveletFamily::Db2).map_err(|e| e.to_string())?;
    let mut dims = Vec::new();
    for s in 1..=2 {
        let g = idwt2(&c, s, WaveletFamily::Db2).map_err(|e| e.to_string())?;
        ensure(shape.output_dims(s) == (g.height, g.width), || format!("s={s}: shape bookkeeping disagrees"))?;
        dims.push((g.height, g.width));
    }
    ensure(dims == [(8, 8), (16, 16)], || format!("got {dims:?}"))?;
    Ok("s=1 -> 8x8, s=2 -> 16x16".into())
}

fn init_identity() -> Outcome {
    let cam = Camera::from_fov(look_at([2.5, -3.0, 1.2], [0.0; 3]), 0.7, 12, 12, Background::White)
        .map_err(|e| e.to_string())?;
    let opts = RenderOptions {
        samples_per_ray: 24,
        near: 2.0,
        far: 6.0,
    };
    for fusion in Fusion::ALL {
        let cfg = ModelConfig {
            fusion,
            ..Default::default()
        }
        .validated()
        .map_err(|e| e.to_string())?;
        let field = WaveletField::zeros(cfg.clone()).map_err(|e| e.to_string())?;
        let decoder = ColorBasisDecoder::init(cfg.feature_len(), cfg.decoder_width, cfg.decoder_layers, 7)
            .map_err(|e| e.to_string())?;
        let cache = refresh_cache(&field, 0).map_err(|e| e.to_string())?;
        let imgs: Vec<_> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&t| render_image(&field, &cache, &decoder, &cam, t, &opts))
            .collect();
        ensure(imgs[0] == imgs[1] && imgs[1] == imgs[2], || format!("{fusion:?}: renders differ over t"))?;
        let time: Vec<_> = PlaneId::DYNAMIC
            .iter()
            .zip(&field.planes)
            .filter(|(id, _)| id.is_space_time())
            .map(|(_, p)| p)
            .collect();
        let ts = reg_ts(&time);
        ensure(ts == 0.0, || format!("{fusion:?}: reg_ts = {ts:e}"))?;
    }
    Ok("bit-identical renders at t = 0, 0.5, 1 for all fusions; reg_ts = 0".into())
}

fn fusion_identities() -> Outcome {
    let mut rng = common::rng(104);
    let mut checks = 0;
    for pattern in 0..8u32 {
        let t: Vec<f64> = (0..3).map(|i| ((pattern >> i) & 1) as f64).collect();
        let ones = t.iter().sum::<f64>();
        for _ in 0..100 {
            let s: Vec<Vec<f64>> = (0..3).map(|_| (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let tv: Vec<Vec<f64>> = t.iter().map(|&v| vec![v; 8]).collect();
            let space = [&s[0][..], &s[1][..], &s[2][..]];
            let time = [&tv[0][..], &tv[1][..], &tv[2][..]];
            let hp = fuse_hp(&[space[0], space[1], space[2], time[0], time[1], time[2]]);
            let zmm = fuse_zmm(space, time);
            let zam = fuse_zam(space, time);
            for c in 0..8 {
                let prod = s[0][c] * s[1][c] * s[2][c];
                let want_zmm = if ones == 0.0 { 0.0 } else { prod };
                let want_hp = if ones == 3.0 { prod } else { 0.0 };
                ensure(zmm[c] == want_zmm, || format!("ZMM pattern {pattern:03b}"))?;
                ensure(hp[c] == want_hp, || format!("HP pattern {pattern:03b}"))?;
                ensure(zam[c] == ones / 3.0 * prod, || format!("ZAM pattern {pattern:03b}"))?;
                if ones == 3.0 {
                    ensure(hp[c] == zmm[c] && zmm[c] == zam[c], || "static separability".into())?;
                }
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} exact checks over 8 time patterns"))
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for fusion in Fusion::ALL {
        let r = common::gradient_check(fusion, 11, 1e-3);
        ensure(r.max_rel <= 1e-3, || format!("{fusion:?}: rel err {:.2e} at {}", r.max_rel, r.worst))?;
        parts.push(format!("{fusion:?} {:.1e} ({} params)", r.max_rel, r.checked));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!("{}, {:.2?}", parts.join(", "), elapsed))
}

fn regularizer_oracles() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let mut rng = common::rng(200 + seed);
        let n = rng.gen_range(1..5);
        let (h, w) = (rng.gen_range(3..9), rng.gen_range(3..9));
        let grids: Vec<Grid> = (0..n).map(|_| common::random_grid(&mut rng, 2, h, w)).collect();
        let refs: Vec<&Grid> = grids.iter().collect();
        worst = worst
            .max((reg_tv(&refs) - common::oracle::tv(&refs)).abs())
            .max((reg_sst(&refs) - common::oracle::sst(&refs)).abs())
            .max((reg_time_smooth(&refs) - common::oracle::time_smooth(&refs)).abs());
        let field = common::random_field(common::tiny_config(Fusion::Zmm), 300 + seed);
        let time: Vec<_> = PlaneId::DYNAMIC
            .iter()
            .zip(&field.planes)
            .filter(|(id, _)| id.is_space_time())
            .map(|(_, p)| p)
            .collect();
        worst = worst.max((reg_ts(&time) - common::oracle::ts(&time)).abs());
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("50 inputs per regularizer, max deviation {worst:.1e}"))
}

fn codec_round_trip(trained: Option<&(WaveletField, ColorBasisDecoder)>) -> Outcome {
    let cfg = common::tiny_config(Fusion::Zmm);
    let mut field = common::random_field(cfg.clone(), 21);
    for p in field.planes.iter_mut() {
        p.data.iter_mut().for_each(|v| *v = waveplanes::field::quantize(*v * 0.3));
    }
    let decoder = ColorBasisDecoder::init(cfg.feature_len(), cfg.decoder_width, cfg.decoder_layers, 22)
        .map_err(|e| e.to_string())?;
    for tau in [0.0, 0.01, 0.1] {
        let expected = threshold_coeffs(&field, tau);
        for backend in Backend::ALL {
            let bytes = compress_model(&field, &decoder, tau, backend).map_err(|e| e.to_string())?;
            let (f, d) = decompress_model(&bytes).map_err(|e| e.to_string())?;
            ensure(f == expected && d == decoder, || format!("(a) {backend} tau={tau} not bit-exact"))?;
        }
    }
    let cam = Camera::from_fov(look_at([0.0, -4.0, 1.0], [0.0; 3]), 0.7, 8, 8, Background::White)
        .map_err(|e| e.to_string())?;
    let opts = RenderOptions::default();
    let thresholded = threshold_coeffs(&field, 0.1);
    let (restored, dec) = decompress_model(&compress_model(&field, &decoder, 0.1, Backend::Lzma).unwrap()).unwrap();
    let a = render_image(&thresholded, &refresh_cache(&thresholded, 0).unwrap(), &decoder, &cam, 0.3, &opts);
    let b = render_image(&restored, &refresh_cache(&restored, 0).unwrap(), &dec, &cam, 0.3, &opts);
    ensure(a == b, || "(b) renders differ after round trip".into())?;

    let Some((field, decoder)) = trained else {
        return Err("(c) no trained toy model available".into());
    };
    let stats = plane_stats(field, 0.1);
    let total: usize = stats.iter().map(|s| s.coefficients).sum();
    let nonzero: usize = stats.iter().map(|s| s.nonzero).sum();
    let sparsity = 1.0 - nonzero as f64 / total as f64;
    let size = |b| compress_model(field, decoder, 0.1, b).map(|v| v.len()).map_err(|e| e.to_string());
    let (lzma, gzip) = (size(Backend::Lzma)?, size(Backend::Gzip)?);
    let dense = 4 * (total + decoder.params.len());
    let checkpoint = compress_model(field, decoder, 0.0, Backend::Raw).map_err(|e| e.to_string())?.len();
    let ratio = dense as f64 / lzma as f64;
    ensure(lzma <= gzip, || format!("(c) lzma {lzma} B > gzip {gzip} B"))?;
    if sparsity >= 0.9 {
        ensure(ratio >= 5.0, || format!("(c) only {ratio:.2}x smaller than raw at sparsity {sparsity:.3}"))?;
    }
    Ok(format!(
        "(a)(b) exact; (c) sparsity {:.1}%, lzma {lzma} B <= gzip {gzip} B, {ratio:.1}x vs dense f32 ({dense} B), {:.1}x vs dense checkpoint ({checkpoint} B)",
        100.0 * sparsity,
        checkpoint as f64 / lzma as f64
    ))
}

fn transmittance() -> Outcome {
    let mut rng = common::rng(110);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..96);
        let sigmas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..80.0)).collect();
        let deltas: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-3..0.5)).collect();
        let colors: Vec<[f64; 3]> = (0..n).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        let out = composite(&sigmas, &deltas, &colors, [1.0; 3]);
        worst = worst.max((out.weights.iter().sum::<f64>() + out.residual - 1.0).abs());
    }
    let cfg = common::tiny_config(Fusion::Zam);
    let field = common::random_field(cfg.clone(), 12);
    let decoder = ColorBasisDecoder::init(cfg.feature_len(), cfg.decoder_width, cfg.decoder_layers, 13).unwrap();
    let cache = refresh_cache(&field, 0).unwrap();
    let batch = common::random_batch(200, 14);
    for (ray, t) in batch.rays.iter().zip(&batch.times) {
        let out = trace_ray(&cfg, &cache, &decoder, ray, *t, 32, [1.0; 3], None);
        worst = worst.max((out.weights.iter().sum::<f64>() + out.residual - 1.0).abs());
    }
    ensure(worst <= 1e-6, || format!("max deviation {worst:e}"))?;
    Ok(format!("1000 random rays plus 200 field rays, max deviation {worst:.1e}"))
}

const TOY_SAMPLES: usize = 32;

fn toy_opts() -> RenderOptions {
    RenderOptions {
        samples_per_ray: TOY_SAMPLES,
        near: 2.0,
        far: 6.0,
    }
}

fn toy_model(fusion: Fusion, static_mode: bool) -> ModelConfig {
    ModelConfig {
        features: 16,
        levels: 2,
        spatial_res: 32,
        time_res: 32,
        scales: vec![1, 2],
        fusion,
        static_mode,
        decoder_width: 32,
        ..Default::default()
    }
}

fn toy_train(seed: u64) -> TrainConfig {
    TrainConfig {
        steps: 2000,
        batch_size: 256,
        samples_per_ray: TOY_SAMPLES,
        seed,
        weights: RegWeights {
            tv: 1e-3,
            ..Default::default()
        },
        ..Default::default()
    }
}

/// Mean over test frames of the PSNR of each frame's own mean color.
fn best_constant_psnr(frames: &[waveplanes::data::Frame]) -> f64 {
    let mut total = 0.0;
    for f in frames {
        let n = (f.rgb.len() / 3) as f64;
        let mean: Vec<f64> = (0..3).map(|c| f.rgb.iter().skip(c).step_by(3).sum::<f64>() / n).collect();
        let pred: Vec<f64> = (0..f.rgb.len()).map(|i| mean[i % 3]).collect();
        total += psnr(&pred, &f.rgb).unwrap();
    }
    total / frames.len() as f64
}

struct ToyRun {
    label: String,
    field: WaveletField,
    decoder: ColorBasisDecoder,
    init: f64,
    baseline: f64,
    test: f64,
    windows: Vec<f64>,
    elapsed: Duration,
}

fn run_toy(data: &Dataset, model: ModelConfig, seed: u64, label: String) -> Result<ToyRun, String> {
    let start = Instant::now();
    let mut trainer = Trainer::new(model, toy_train(seed)).map_err(|e| e.to_string())?;
    let opts = toy_opts();
    let init = evaluate(&trainer.field, &trainer.decoder, &data.test, &opts, 5).map_err(|e| e.to_string())?;
    let logs: Vec<StepLog> =
        trainer.fit(&data.train, data.background.rgb(), |_, _| Ok(())).map_err(|e| format!("{label}: {e}"))?;
    let after = evaluate(&trainer.field, &trainer.decoder, &data.test, &opts, 5).map_err(|e| e.to_string())?;
    let windows = logs
        .chunks(100)
        .map(|w| w.iter().map(|l| l.loss.total).sum::<f64>() / w.len() as f64)
        .collect();
    Ok(ToyRun {
        label,
        field: trainer.field,
        decoder: trainer.decoder,
        init: init.psnr_whole,
        baseline: best_constant_psnr(&data.test),
        test: after.psnr_whole,
        windows,
        elapsed: start.elapsed(),
    })
}

/// Largest ratio between consecutive 100-step window means.
const WINDOW_SLACK: f64 = 1.05;

fn check_run(run: &ToyRun) -> Result<(), String> {
    let l = &run.label;
    ensure(run.test >= run.init + 10.0, || {
        format!("{l}: test {:.2} dB < init {:.2} dB + 10", run.test, run.init)
    })?;
    ensure(run.test >= run.baseline + 2.0, || {
        format!("{l}: test {:.2} dB < best constant {:.2} dB + 2", run.test, run.baseline)
    })?;
    let worst = run.windows.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    ensure(worst <= WINDOW_SLACK, || format!("{l}: window mean rose by a factor {worst:.3}"))?;
    ensure(run.windows.last() < run.windows.first(), || format!("{l}: no overall decrease"))?;
    ensure(run.elapsed <= Duration::from_secs(600), || format!("{l}: took {:?}", run.elapsed))?;
    Ok(())
}

fn describe(run: &ToyRun) -> String {
    let worst = run.windows.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    format!(
        "{} init {:.2} const {:.2} test {:.2} dB, worst window ratio {:.3}, {:.0?}",
        run.label, run.init, run.baseline, run.test, worst, run.elapsed
    )
}

fn toy_training(runs: &mut Vec<ToyRun>) -> Outcome {
    let (data, _) = gen_synthetic(&SyntheticSceneSpec {
        frames: 8,
        views_per_frame: 8,
        width: 32,
        height: 32,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let mut failures = Vec::new();
    for fusion in Fusion::ALL {
        for seed in 0..3 {
            let run = run_toy(&data, toy_model(fusion, false), seed, format!("{fusion:?}/seed{seed}"))?;
            eprintln!("  {}", describe(&run));
            if let Err(e) = check_run(&run) {
                failures.push(e);
            }
            runs.push(run);
        }
    }
    if !failures.is_empty() {
        return Err(failures.join("; "));
    }
    let min_gain = runs.iter().map(|r| r.test - r.init).fold(f64::INFINITY, f64::min);
    let min_margin = runs.iter().map(|r| r.test - r.baseline).fold(f64::INFINITY, f64::min);
    let slowest = runs.iter().map(|r| r.elapsed).max().unwrap_or_default();
    Ok(format!(
        "9 runs, min gain over init {min_gain:.2} dB, min margin over constant {min_margin:.2} dB, slowest {slowest:.0?}"
    ))
}

fn static_mode() -> Outcome {
    let centre = [0.1, -0.2, 0.15];
    let (data, _) = gen_synthetic(&SyntheticSceneSpec {
        blob: Blob {
            start: centre,
            end: centre,
            radius: 0.4,
            density: 12.0,
        },
        frames: 1,
        views_per_frame: 48,
        test_views_per_frame: 8,
        width: 32,
        height: 32,
        seed: 9,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let run = run_toy(&data, toy_model(Fusion::Zam, true), 0, "static".into())?;
    eprintln!("  {}", describe(&run));
    ensure(run.field.planes.len() == 3, || "static model is not a tri-plane".into())?;
    ensure(run.test >= run.init + 10.0, || {
        format!("test {:.2} dB < init {:.2} dB + 10", run.test, run.init)
    })?;
    let cache = refresh_cache(&run.field, 0).map_err(|e| e.to_string())?;
    let cam = &data.test[0].camera;
    let a = render_image(&run.field, &cache, &run.decoder, cam, 0.0, &toy_opts());
    let b = render_image(&run.field, &cache, &run.decoder, cam, 1.0, &toy_opts());
    ensure(a == b, || "renders depend on t".into())?;
    Ok(format!("{}; renders at t=0 and t=1 identical", describe(&run)))
}

fn main() -> ExitCode {
    let mut runs = Vec::new();
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "wavelet round trip", wavelet_round_trip()),
        (2, "partial reconstruction shapes", partial_shapes()),
        (3, "initialization identity", init_identity()),
        (4, "fusion identities", fusion_identities()),
        (5, "gradient check", gradient_check()),
        (6, "regularizer oracles", regularizer_oracles()),
    ];
    let toy = toy_training(&mut runs);
    let trained = runs
        .iter()
        .find(|r| r.label == "Zmm/seed0")
        .map(|r| (r.field.clone(), r.decoder.clone()));
    results.push((7, "codec", codec_round_trip(trained.as_ref())));
    results.push((8, "toy training", toy));
    results.push((9, "static mode", static_mode()));
    results.push((10, "transmittance conservation", transmittance()));

    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
