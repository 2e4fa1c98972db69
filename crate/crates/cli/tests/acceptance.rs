//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use eggd_cli::bench::{run_bench, BenchConfig, BenchResult, METHOD_EGGD, METHOD_NOISY};
use eggd_cli::fixtures::{fixture_set, FIXTURE_NAMES};
use eggd_cli::io::{write_picture, Picture};
use eggd_core::color::{rgb_to_ycbcr, ycbcr_to_rgb, RgbImage};
use eggd_core::denoise::{denoise_channel, ChannelParams, DenoiseOptions};
use eggd_core::graph::{geodesic_distances, PatchGraph};
use eggd_core::image::{extract_patches, merge_patches, Channel, Planar};
use eggd_core::linalg::{double_center, exact_svd, qr_orthonormalize, rsvd};
use eggd_core::metrics::{psnr, psnr_from_rmse, rmse, shannon_entropy, ssim};
use eggd_core::noise::{add_gaussian_noise, measure_zeta, NoiseSpec};
use eggd_core::Seed;
use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn random_channel(side: usize, rng: &mut ChaCha8Rng) -> Channel {
    Channel::from_fn(side, |_, _| rng.random_range(0.0..=255.0)).unwrap()
}

fn random_rgb(side: usize, rng: &mut ChaCha8Rng) -> RgbImage {
    RgbImage::new(
        random_channel(side, rng),
        random_channel(side, rng),
        random_channel(side, rng),
    )
    .unwrap()
}

fn gramian_centering() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(10..=200);
        let pts = Array2::from_shape_fn((n, 3), |_| rng.random_range(-50.0f64..50.0));
        let d = Array2::from_shape_fn((n, n), |(i, j)| {
            let diff = &pts.row(i) - &pts.row(j);
            diff.dot(&diff).sqrt()
        });
        let g = double_center(d.view()).unwrap().into_array();
        let sums = g.sum_axis(Axis(0)).into_iter().chain(g.sum_axis(Axis(1)));
        let max = sums.fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(max / n as f64);
    }
    let t = clock.elapsed();
    outcome(
        worst <= 1e-6 && within(t, 5),
        format!(
            "max |row or column sum| / N = {worst:.2e}, {:.2} s",
            t.as_secs_f64()
        ),
    )
}

fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b, w) in edges {
        d[a][b] = d[a][b].min(w);
        d[b][a] = d[b][a].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

fn random_connected_graph(
    rng: &mut ChaCha8Rng,
    integer: bool,
) -> (usize, Vec<(usize, usize, f64)>) {
    let n = rng.random_range(2..=100);
    let weight = |rng: &mut ChaCha8Rng| {
        if integer {
            f64::from(rng.random_range(1..=20u32))
        } else {
            rng.random_range(0.01..10.0)
        }
    };
    let mut edges = Vec::new();
    // Random spanning tree, then extra edges.
    for v in 1..n {
        let parent = rng.random_range(0..v);
        let w = weight(rng);
        edges.push((parent, v, w));
    }
    for _ in 0..rng.random_range(0..=2 * n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            let w = weight(rng);
            edges.push((a, b, w));
        }
    }
    (n, edges)
}

fn shortest_paths() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut int_ok, mut real_err) = (true, 0.0f64);
    for g in 0..100 {
        let integer = g % 2 == 0;
        let (n, edges) = random_connected_graph(&mut rng, integer);
        let graph = PatchGraph::from_edges(n, &edges).unwrap();
        let got = geodesic_distances(&graph).unwrap();
        let want = floyd_warshall(n, &edges);
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (got.get(i, j), want[i][j]);
                if integer {
                    int_ok &= a == b;
                } else {
                    real_err = real_err.max((a - b).abs());
                }
            }
        }
    }
    let t = clock.elapsed();
    outcome(
        int_ok && real_err <= 1e-9 && within(t, 10),
        format!(
            "integer weights exact: {int_ok}, real weights max error {real_err:.1e}, {:.2} s",
            t.as_secs_f64()
        ),
    )
}

fn rsvd_fidelity() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut value_err, mut recon_err, mut truth_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut deterministic = true;
    for t in 0..20 {
        let r = t % 10 + 1;
        let gauss =
            |rng: &mut ChaCha8Rng| Array2::from_shape_fn((200, r), |_| rng.random_range(-1.0..1.0));
        let u = qr_orthonormalize(gauss(&mut rng).view()).unwrap().q;
        let v = qr_orthonormalize(gauss(&mut rng).view()).unwrap().q;
        let sigma: Vec<f64> = (0..r).map(|i| 100.0 / (1.0 + i as f64)).collect();
        let mut us = u.clone();
        for (mut col, s) in us.axis_iter_mut(Axis(1)).zip(&sigma) {
            col *= *s;
        }
        let a = us.dot(&v.t());

        let approx = rsvd(a.view(), r, 10, Seed(t as u64)).unwrap();
        let again = rsvd(a.view(), r, 10, Seed(t as u64)).unwrap();
        deterministic &= approx == again;
        let exact = exact_svd(a.view()).unwrap();
        for l in 0..r {
            value_err = value_err.max((approx.values[l] - exact.values[l]).abs() / exact.values[l]);
            truth_err = truth_err.max((approx.values[l] - sigma[l]).abs() / sigma[l]);
        }
        let diff = &a - &approx.reconstruct();
        let fro = |m: &Array2<f64>| m.iter().map(|x| x * x).sum::<f64>().sqrt();
        recon_err = recon_err.max(fro(&diff) / fro(&a));
    }
    let t = clock.elapsed();
    outcome(
        value_err <= 1e-8
            && truth_err <= 1e-8
            && recon_err <= 1e-8
            && deterministic
            && within(t, 30),
        format!(
            "values vs exact {value_err:.1e}, vs construction {truth_err:.1e}, \
             reconstruction {recon_err:.1e}, deterministic {deterministic}, {:.2} s",
            t.as_secs_f64()
        ),
    )
}

fn projection_identity() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let img = random_channel(8, &mut rng);
    let out = denoise_channel(&img, &ChannelParams::new(3, 8, 64), Seed(4)).unwrap();
    let err = img
        .data()
        .iter()
        .zip(out.data())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let t = clock.elapsed();
    outcome(
        err <= 1e-4 && within(t, 10),
        format!("max abs pixel error {err:.1e}, {:.2} s", t.as_secs_f64()),
    )
}

fn patch_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for side in [16, 23, 40, 64] {
        for rho in [3, 5, 7] {
            let img = random_channel(side, &mut rng);
            let back = merge_patches(&extract_patches(&img, rho).unwrap()).unwrap();
            for (a, b) in img.data().iter().zip(back.data()) {
                worst = worst.max((a - b).abs());
            }
            cases += 1;
        }
    }
    outcome(
        worst <= 1e-10,
        format!("{cases} channels, max error {worst:.1e}"),
    )
}

fn color_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut colours: Vec<[f64; 3]> = Vec::new();
    for k in 0..8 {
        colours.push([k & 1, (k >> 1) & 1, (k >> 2) & 1].map(|b| if b == 1 { 255.0 } else { 0.0 }));
    }
    for _ in 0..10_000 {
        colours.push([(); 3].map(|_| rng.random_range(0.0..=255.0)));
    }
    let mut worst = 0.0f64;
    for c in &colours {
        let back = ycbcr_to_rgb(&rgb_to_ycbcr(&RgbImage::filled(1, *c))).pixel(0);
        for i in 0..3 {
            worst = worst.max((back[i] - c[i]).abs());
        }
    }
    let black = RgbImage::filled(1, [0.0; 3]);
    let ycc = rgb_to_ycbcr(&black);
    let black_exact =
        ycc.pixel(0) == [0.0, 128.0, 128.0] && ycbcr_to_rgb(&ycc).pixel(0) == [0.0; 3];
    outcome(
        worst <= 2.0 && black_exact,
        format!(
            "{} colours, max error {worst:.3} levels, black exact {black_exact}",
            colours.len()
        ),
    )
}

fn oracle_entropy(values: &[f64]) -> f64 {
    let mut counts: HashMap<i64, usize> = HashMap::new();
    for &v in values {
        *counts.entry((v + 0.5).floor() as i64).or_default() += 1;
    }
    let n = values.len() as f64;
    -counts
        .values()
        .map(|&c| c as f64 / n)
        .map(|p| p * p.log2())
        .sum::<f64>()
}

fn oracle_rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Two-factor form of global SSIM (equivalent when c3 = c2 / 2).
fn oracle_ssim(a: &[f64], b: &[f64]) -> f64 {
    let (c1, c2) = (2.55f64.powi(2), 7.65f64.powi(2));
    let x = Array1::from(a.to_vec());
    let y = Array1::from(b.to_vec());
    let (mx, my) = (x.mean().unwrap(), y.mean().unwrap());
    let vx = x.mapv(|v| (v - mx).powi(2)).mean().unwrap();
    let vy = y.mapv(|v| (v - my).powi(2)).mean().unwrap();
    let cov = ((&x - mx) * (&y - my)).mean().unwrap();
    ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

fn metrics_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = random_rgb(24, &mut rng);
    let identity = (ssim(&a, &a).unwrap() - 1.0).abs();
    let uniform = Channel::new(16, (0..256).map(f64::from).collect()).unwrap();
    let entropy = shannon_entropy(&uniform).unwrap();
    let db = (psnr_from_rmse(2.55) - 40.0).abs();

    let mut oracle_err = 0.0f64;
    for _ in 0..20 {
        let side = rng.random_range(4..40);
        let x = random_rgb(side, &mut rng);
        let y = x.map_values(|_, _, v| v + rng.random_range(-30.0..30.0));
        let (px, py) = (x.planes().concat(), y.planes().concat());
        let e = oracle_rmse(&px, &py);
        let s = x
            .planes()
            .iter()
            .zip(y.planes())
            .map(|(p, q)| oracle_ssim(p, q))
            .sum::<f64>()
            / 3.0;
        let g = x.channels()[0].clone();
        let h = y.channels()[0].clone();
        for (got, want) in [
            (shannon_entropy(&y).unwrap(), oracle_entropy(&py)),
            (rmse(&x, &y).unwrap(), e),
            (psnr(&x, &y).unwrap(), 20.0 * (255.0 / e).log10()),
            (ssim(&x, &y).unwrap(), s),
            (ssim(&g, &h).unwrap(), oracle_ssim(g.data(), h.data())),
            (
                measure_zeta(&x, &y).unwrap(),
                100.0 * (e * e * px.len() as f64).sqrt()
                    / px.iter().map(|v| v * v).sum::<f64>().sqrt(),
            ),
        ] {
            oracle_err = oracle_err.max((got - want).abs());
        }
    }
    outcome(
        identity <= 1e-12 && entropy == 8.0 && db <= 1e-9 && oracle_err <= 1e-10,
        format!(
            "ssim(a,a) off by {identity:.1e}, uniform entropy {entropy}, \
             psnr(2.55) off by {db:.1e}, oracle max error {oracle_err:.1e}"
        ),
    )
}

fn quantized(img: &RgbImage) -> RgbImage {
    match Picture::Rgb(img.clone()).quantized() {
        Picture::Rgb(q) => q,
        Picture::Gray(_) => unreachable!(),
    }
}

fn fixtures() -> Vec<(String, RgbImage)> {
    fixture_set(Seed(0))
        .unwrap()
        .into_iter()
        .map(|(name, img)| (name.to_string(), quantized(&img)))
        .collect()
}

fn noise_targeting() -> Outcome {
    let mut worst = 0.0f64;
    for (i, (_, img)) in fixtures().iter().enumerate() {
        for target in [2.0, 4.0, 6.0] {
            let out =
                add_gaussian_noise(img, &NoiseSpec::zeta(target, Seed(50 + i as u64))).unwrap();
            worst = worst.max((out.zeta - target).abs() / target);
        }
    }
    outcome(
        worst <= 0.05,
        format!("max relative miss {:.2}%", 100.0 * worst),
    )
}

fn bench_rows() -> (Vec<BenchResult>, Duration) {
    let images: Vec<(String, Picture)> = fixtures()
        .into_iter()
        .map(|(n, img)| (n, Picture::Rgb(img)))
        .collect();
    let config = BenchConfig {
        levels: vec![2.0, 4.0, 6.0],
        overrides: Default::default(),
        seed: Seed(0),
        options: DenoiseOptions::default(),
    };
    let clock = Instant::now();
    let rows = run_bench(&images, &config).expect("bench runs");
    (rows, clock.elapsed())
}

fn find<'a>(rows: &'a [BenchResult], image: &str, zeta: f64, method: &str) -> &'a BenchResult {
    rows.iter()
        .find(|r| r.image == image && r.zeta == zeta && r.method == method)
        .expect("row present")
}

fn improvement(rows: &[BenchResult], elapsed: Duration) -> Outcome {
    let (mut min_db, mut min_ssim) = (f64::INFINITY, f64::INFINITY);
    for name in FIXTURE_NAMES {
        for zeta in [2.0, 4.0, 6.0] {
            let noisy = find(rows, name, zeta, METHOD_NOISY);
            let clean = find(rows, name, zeta, METHOD_EGGD);
            min_db = min_db.min(clean.psnr - noisy.psnr);
            min_ssim = min_ssim.min(clean.ssim - noisy.ssim);
        }
    }
    outcome(
        min_db >= 3.0 && min_ssim >= 0.05 && within(elapsed, 15 * 60),
        format!(
            "smallest gains {min_db:.2} dB PSNR, {min_ssim:.3} SSIM over 12 runs, bench {:.0} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn monotone(rows: &[BenchResult]) -> Outcome {
    let mut inversions = Vec::new();
    for name in FIXTURE_NAMES {
        let p: Vec<f64> = [2.0, 4.0, 6.0]
            .iter()
            .map(|&z| find(rows, name, z, METHOD_EGGD).psnr)
            .collect();
        for w in p.windows(2) {
            if w[1] > w[0] {
                inversions.push(w[1] - w[0]);
            }
        }
    }
    let pass = inversions.is_empty() || (inversions.len() == 1 && inversions[0] <= 0.3);
    outcome(
        pass,
        format!("{} inversions {inversions:?}", inversions.len()),
    )
}

fn run_denoise(exe: &str, input: &Path, output: &Path, threads: &str) -> bool {
    Command::new(exe)
        .args(["denoise", "--seed", "11", "--input"])
        .arg(input)
        .arg("--output")
        .arg(output)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let clean = eggd_cli::fixtures::texture(32, Seed(9)).unwrap();
    let noisy = add_gaussian_noise(&clean, &NoiseSpec::zeta(4.0, Seed(9)))
        .unwrap()
        .image;
    let input = dir.path().join("noisy.png");
    write_picture(&input, &Picture::Rgb(noisy)).unwrap();
    let exe = env!("CARGO_BIN_EXE_eggd");
    let runs = [("1", "a.png"), ("1", "b.png"), ("4", "c.png")];
    let mut ok = true;
    for (threads, name) in runs {
        ok &= run_denoise(exe, &input, &dir.path().join(name), threads);
    }
    if !ok {
        return outcome(false, "denoise command failed");
    }
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    let (a, b, c) = (read("a.png"), read("b.png"), read("c.png"));
    outcome(
        a == b && a == c,
        format!(
            "repeat identical {}, 1 vs 4 threads identical {}",
            a == b,
            a == c
        ),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "gramian centering", gramian_centering()),
        (2, "shortest-path oracle", shortest_paths()),
        (3, "rsvd fidelity", rsvd_fidelity()),
        (4, "projection identity", projection_identity()),
        (5, "patch round trip", patch_round_trip()),
        (6, "color round trip", color_round_trip()),
        (7, "metrics", metrics_check()),
        (8, "noise targeting", noise_targeting()),
    ];
    let (rows, elapsed) = bench_rows();
    results.push((9, "denoising improvement", improvement(&rows, elapsed)));
    results.push((10, "monotone degradation", monotone(&rows)));
    results.push((11, "determinism", determinism()));

    println!();
    for r in &rows {
        println!(
            "  {:<13} zeta {:>3} {:<6} psnr {:>7.3} ssim {:.4} she {:.3}",
            r.image, r.zeta, r.method, r.psnr, r.ssim, r.she
        );
    }
    println!();
    let mut failed = 0;
    for (id, name, o) in &results {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict} {name}: {}", o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "\nacceptance: {} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
