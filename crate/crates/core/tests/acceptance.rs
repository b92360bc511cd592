//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use yosida_core::cli;
use yosida_core::degree::{degree_on, DegreeOptions, DegreeReport, Region};
use yosida_core::homotopy::{annulus_search, CMap, InclusionProblem, Multifunction, MultistartConfig, Schedule, SearchOutcome};
use yosida_core::operators::{Grid, Homogeneity};
use yosida_core::pde::{build_elliptic, build_parabolic, solve_elliptic_annulus, step_parabolic, EllipticSpec, GridKind, ParabolicSpec};
use yosida_core::space::lp_norm;
use yosida_core::yosida::{default_lambda_schedule, splitting_defect, verify_approximant_properties, verify_homogeneity_transmission};
use yosida_core::{resolvent, Gauge, MonotoneOp, PVector};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn solve(op: &MonotoneOp, p: f64, lambda: f64, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let g = Gauge::new(p).unwrap();
    let r = resolvent(op, &g, lambda, &PVector::primal(x.to_vec(), p).unwrap(), 1e-12).unwrap();
    (r.x_lambda.coords().to_vec(), r.a_lambda.coords().to_vec())
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

fn closed_form_battery() -> Outcome {
    let start = Instant::now();
    let xs: [&[f64]; 3] = [&[3.0, -0.5, 0.2], &[-2.0, 1e-3, 7.5], &[0.0, 1.1, -4.0]];
    let mut worst = 0.0_f64;
    for &lambda in &[1e-4, 1e-2, 1.0, 10.0] {
        for x in xs {
            // soft threshold
            let soft = MonotoneOp::l1(0.7, 3).unwrap();
            let u: Vec<f64> = x.iter().map(|v| v.signum() * (v.abs() - 0.7 * lambda).max(0.0)).collect();
            let a: Vec<f64> = x.iter().zip(&u).map(|(v, w)| (v - w) / lambda).collect();
            let (cu, ca) = solve(&soft, 2.0, lambda, x);
            worst = worst.max(max_gap(&cu, &u)).max(max_gap(&ca, &a));

            // a I
            let lin = MonotoneOp::scaled_identity(2.5, 3).unwrap();
            let a: Vec<f64> = x.iter().map(|v| 2.5 * v / (1.0 + 2.5 * lambda)).collect();
            let u: Vec<f64> = x.iter().map(|v| v / (1.0 + 2.5 * lambda)).collect();
            let (cu, ca) = solve(&lin, 2.0, lambda, x);
            worst = worst.max(max_gap(&cu, &u)).max(max_gap(&ca, &a));

            // box projection
            let cone = MonotoneOp::box_cone(vec![-1.0, 0.0, -3.0], vec![1.0, 0.5, 3.0]).unwrap();
            let u: Vec<f64> = vec![x[0].clamp(-1.0, 1.0), x[1].clamp(0.0, 0.5), x[2].clamp(-3.0, 3.0)];
            let a: Vec<f64> = x.iter().zip(&u).map(|(v, w)| (v - w) / lambda).collect();
            let (cu, ca) = solve(&cone, 2.0, lambda, x);
            worst = worst.max(max_gap(&cu, &u)).max(max_gap(&ca, &a));

            // cube at p = 4
            let cube = MonotoneOp::power(3.0, 1.0, 1).unwrap();
            let u = x[0] / (1.0 + lambda.cbrt());
            let (cu, ca) = solve(&cube, 4.0, lambda, &x[..1]);
            worst = worst.max((cu[0] - u).abs()).max((ca[0] - u * u * u).abs());
        }
    }
    let t = start.elapsed();
    outcome(worst <= 1e-9 && t < Duration::from_secs(1), format!("max error {worst:.2e}, {:.3} s", secs(t)))
}

fn random_operator(rng: &mut ChaCha8Rng) -> MonotoneOp {
    let dim = rng.gen_range(1..=3);
    match rng.gen_range(0..9) {
        0 => MonotoneOp::power(rng.gen_range(0.5..3.0), rng.gen_range(0.2..3.0), dim),
        1 => MonotoneOp::l1(rng.gen_range(0.1..2.0), dim),
        2 => MonotoneOp::huber(rng.gen_range(0.1..2.0), dim),
        3 => MonotoneOp::scaled_identity(rng.gen_range(0.0..5.0), dim),
        4 => MonotoneOp::box_cone(vec![-1.0; dim], vec![rng.gen_range(0.0..2.0); dim]),
        5 => MonotoneOp::ball_cone(dim, rng.gen_range(0.5..2.0), 2.0),
        6 => MonotoneOp::one_sided_power(rng.gen_range(1.0..3.0), 1.0, dim),
        7 => MonotoneOp::p_laplacian(Grid::new_line(dim + 1).unwrap(), rng.gen_range(1.5..4.0)),
        _ => MonotoneOp::zero(dim),
    }
    .unwrap()
}

fn splitting_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut failures = 0;
    let mut worst = 0.0_f64;
    let mut errors = 0;
    let mut first_error = String::new();
    for _ in 0..10_000 {
        let op = random_operator(&mut rng);
        let p = rng.gen_range(1.5..4.0);
        let lambda = 10f64.powf(rng.gen_range(-4.0..1.0));
        let x: Vec<f64> = (0..op.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let g = Gauge::new(p).unwrap();
        let r = match resolvent(&op, &g, lambda, &PVector::primal(x.clone(), p).unwrap(), 1e-12) {
            Ok(r) => r,
            Err(e) => {
                if errors == 0 {
                    first_error = format!(" (first: {} p={p} lambda={lambda:e} x={x:?}: {e})", op.name());
                }
                errors += 1;
                continue;
            }
        };
        let d = splitting_defect(&x, &r, &g) / (1.0 + lp_norm(&x, p));
        worst = worst.max(d);
        if d > 1e-9 {
            failures += 1;
        }
    }
    outcome(failures == 0 && errors == 0, format!("{failures} failures, {errors} solver errors, worst relative defect {worst:.2e}{first_error}"))
}

fn properties_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let dim = 2;
    let mut bound_violations = 0;
    let mut trend_failures = 0;
    let mut worst_gap = 0.0_f64;
    let mut blowup = f64::INFINITY;
    let mut witness = String::new();
    for p in [1.5, 2.0] {
        let catalog = [
            MonotoneOp::power(3.0, 1.0, dim),
            MonotoneOp::power(2.0, 1.0, dim),
            MonotoneOp::scaled_identity(2.0, dim),
            MonotoneOp::l1(1.0, dim),
            MonotoneOp::huber(1.0, dim),
            MonotoneOp::box_cone(vec![-1.0; dim], vec![1.0; dim]),
            MonotoneOp::ball_cone(dim, 1.0, 2.0),
            MonotoneOp::one_sided_power(2.0, 1.0, dim),
            MonotoneOp::p_laplacian(Grid::new_line(dim + 1).unwrap(), p),
        ];
        for op in catalog {
            let op = op.unwrap();
            let mut xs: Vec<Vec<f64>> = (0..6).map(|_| op.sample_domain(&mut rng)).collect();
            let outside = vec![3.0; dim];
            let is_cone = !op.in_domain(&outside);
            if is_cone {
                xs.push(outside);
            }
            let g = Gauge::new(p).unwrap();
            let report = verify_approximant_properties(&op, &g, &xs, &default_lambda_schedule()).unwrap();
            let bound = report.check("|A_lambda x| <= |A0 x|").unwrap();
            bound_violations += bound.witnesses.len() + usize::from(!bound.passed && bound.witnesses.is_empty());
            for name in ["J_lambda x -> x", "A_lambda x -> A0 x"] {
                let c = report.check(name).unwrap();
                worst_gap = worst_gap.max(c.max_violation);
                if !c.passed {
                    trend_failures += 1;
                    witness = format!(" ({} p={p} {name}: {:?})", op.name(), c.witnesses.first());
                }
            }
            if is_cone {
                let c = report.check("|A_lambda x| -> infinity outside the domain closure").unwrap();
                if !c.passed {
                    trend_failures += 1;
                }
                for (name, v) in &report.metrics {
                    if name.starts_with("final |A_lambda x|") {
                        blowup = blowup.min(*v);
                    }
                }
            }
        }
    }
    let pass = bound_violations == 0 && trend_failures == 0 && worst_gap < 1e-4 && blowup >= 1e6;
    outcome(
        pass,
        format!(
            "bound violations {bound_violations}, trend failures {trend_failures}, worst final gap {worst_gap:.2e}, smallest blow-up {blowup:.2e}{witness}"
        ),
    )
}

fn homogeneity_transmission() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0_f64;
    let mut failures = 0;
    for k in 0..1000 {
        let gamma = [0.5, 1.0, 2.0, 3.0][k % 4];
        let dim = rng.gen_range(1..=3);
        let op = if k % 8 < 4 {
            MonotoneOp::power(gamma, rng.gen_range(0.5..2.0), dim).unwrap()
        } else {
            MonotoneOp::one_sided_power(gamma, rng.gen_range(0.5..2.0), dim).unwrap()
        };
        assert_eq!(op.homogeneity(), Homogeneity::Degree(gamma));
        let s = 10f64.powf(rng.gen_range(-1.0..1.0));
        let t = 10f64.powf(rng.gen_range(-3.0..0.0));
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        for p in [gamma + 1.0, gamma + 1.0 + rng.gen_range(0.3..1.5)] {
            let g = Gauge::new(p).unwrap();
            let r = verify_homogeneity_transmission(&op, gamma, &g, t, s, &x).unwrap();
            worst = worst.max(r.max_violation);
            if !r.passed() {
                failures += 1;
            }
        }
    }
    outcome(failures == 0 && worst <= 1e-8, format!("{failures} failures, worst residual {worst:.2e}"))
}

fn timed_degree<F>(f: F, region: &Region) -> (DegreeReport, Duration)
where
    F: FnMut(&[f64]) -> yosida_core::Result<Vec<f64>>,
{
    let start = Instant::now();
    let r = degree_on(f, region, &DegreeOptions::default()).unwrap();
    (r, start.elapsed())
}

fn degrees() -> Outcome {
    let id = |v: &[f64]| Ok(v.to_vec());
    let square = |v: &[f64]| Ok(vec![v[0] * v[0] - v[1] * v[1], 2.0 * v[0] * v[1]]);
    let bench = |v: &[f64]| Ok(vec![v[0].abs() * v[0] - v[0]]);
    let cases: Vec<(&str, DegreeReport, Duration, i64)> = vec![
        {
            let (r, t) = timed_degree(id, &Region::centered_ball(1, 1.0, 2.0).unwrap());
            ("identity n=1", r, t, 1)
        },
        {
            let (r, t) = timed_degree(id, &Region::centered_ball(2, 1.0, 2.0).unwrap());
            ("identity n=2", r, t, 1)
        },
        {
            let (r, t) = timed_degree(id, &Region::centered_ball(3, 1.0, 2.0).unwrap());
            ("identity n=3", r, t, 1)
        },
        {
            let (r, t) = timed_degree(square, &Region::centered_ball(2, 1.0, 2.0).unwrap());
            ("squaring", r, t, 2)
        },
        {
            let (r, t) = timed_degree(bench, &Region::Interval { a: -2.0, b: 2.0 });
            ("|x|x-x on (-2,2)", r, t, 1)
        },
        {
            let (r, t) = timed_degree(bench, &Region::Interval { a: -0.5, b: 0.5 });
            ("|x|x-x on (-0.5,0.5)", r, t, -1)
        },
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r, t, want) in cases {
        let ok = r.certified_value() == Some(want) && t < Duration::from_secs(1);
        pass &= ok;
        parts.push(format!("{name}: {} in {:.3} s", r.describe(), secs(t)));
    }
    outcome(pass, parts.join("; "))
}

fn scalar_annulus() -> Outcome {
    let prob = InclusionProblem::new(
        MonotoneOp::power(2.0, 1.0, 1).unwrap(),
        2.0,
        CMap::linear(-1.0),
        Multifunction::Zero,
        2.0,
        0.5,
        Some(vec![1.0]),
    )
    .unwrap();
    let trace = annulus_search(&prob, &Schedule::default_for(2.0), &MultistartConfig::default()).unwrap();
    let xs: Vec<f64> = trace.candidates.iter().map(|c| c.x[0]).collect();
    let set_ok = trace.outcome == SearchOutcome::Found
        && xs.len() == 2
        && (xs[0] + 1.0).abs() <= 1e-6
        && (xs[1] - 1.0).abs() <= 1e-6;
    let res = trace.candidates.iter().map(|c| c.residual).fold(0.0, f64::max);
    let tails = trace.candidates.iter().all(|c| c.stable_tail(1e-6));
    let gap = trace
        .candidates
        .iter()
        .flat_map(|c| c.gaps[c.gaps.len().saturating_sub(3)..].to_vec())
        .fold(0.0, f64::max);
    outcome(
        set_ok && res <= 1e-8 && tails,
        format!("candidates {xs:?}, max residual {res:.2e}, max tail gap {gap:.2e}"),
    )
}

fn elliptic_demo() -> Outcome {
    let start = Instant::now();
    let single = build_elliptic(&EllipticSpec::single_node_demo()).unwrap();
    let s1 = solve_elliptic_annulus(&single, None, &MultistartConfig::default()).unwrap();
    let norms: Vec<f64> = s1.solutions.iter().map(|u| lp_norm(u, 3.0)).collect();
    let single_ok = !norms.is_empty() && norms.iter().all(|n| (n - 0.0625).abs() <= 1e-6);

    let spec = EllipticSpec { n: 16, delta2: 0.03, ..EllipticSpec::single_node_demo() };
    let fine = build_elliptic(&spec).unwrap();
    let s16 = solve_elliptic_annulus(&fine, None, &MultistartConfig::default()).unwrap();
    let weak = s16.weak_residuals.iter().copied().fold(0.0, f64::max);
    let nonzero = s16.solutions.iter().any(|u| lp_norm(u, 3.0) > 1e-6);
    let t = start.elapsed();
    outcome(
        single_ok && nonzero && !s16.weak_residuals.is_empty() && weak <= 1e-8 && t < Duration::from_secs(10),
        format!(
            "single node norms {norms:?}, N=16 branches {} with weak residual {weak:.2e}, {:.2} s",
            s16.solutions.len(),
            secs(t)
        ),
    )
}

fn parabolic_demo() -> Outcome {
    let spec = ParabolicSpec {
        grid: GridKind::Line,
        n: 2,
        p: 2.0,
        diffusion: false,
        c_coeff: 1.0,
        c_exponent: 2.0,
        forcing: 1.0,
        forcing_slope: 0.0,
        dt: 0.1,
        horizon: 10.0,
    };
    let pb = build_parabolic(&spec).unwrap();
    let tr = step_parabolic(&pb, 100).unwrap();
    let mut u = 0.0;
    let mut worst = 0.0_f64;
    for k in 1..=100 {
        u = (u + spec.dt) / (1.0 + spec.dt);
        worst = worst.max((tr.states[k][0] - u).abs());
    }

    let plap = ParabolicSpec { diffusion: true, p: 3.0, c_coeff: 0.0, dt: 1.0, horizon: 1.0, ..spec };
    let first = step_parabolic(&build_parabolic(&plap).unwrap(), 1).unwrap().states[1][0];
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 16.0 * mid * mid + mid - 1.0 > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let err = (first - root).abs();
    outcome(worst <= 1e-12 && err <= 1e-9, format!("recurrence error {worst:.2e} over 100 steps, first p=3 step error {err:.2e}"))
}

fn specs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn run_suite(out: &Path) -> Vec<(String, Vec<u8>)> {
    let specs = specs_dir();
    let runs: [(&str, &str); 4] = [
        ("annulus", "scalar.toml"),
        ("elliptic", "elliptic_n16.toml"),
        ("parabolic", "parabolic_linear.toml"),
        ("parabolic", "parabolic_plap.toml"),
    ];
    let mut files = Vec::new();
    for (i, (cmd, spec)) in runs.iter().enumerate() {
        let dir = out.join(i.to_string());
        let args = [
            "yosida".to_string(),
            "--seed".into(),
            "42".into(),
            "--out".into(),
            dir.display().to_string(),
            cmd.to_string(),
            "--spec".into(),
            specs.join(spec).display().to_string(),
        ];
        let mut sink = Vec::new();
        let code = cli::run(args, &mut sink);
        assert_eq!(code, 0, "{cmd} {spec}: {}", String::from_utf8_lossy(&sink));
        let mut names: Vec<PathBuf> = std::fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        names.sort();
        for p in names {
            let name = format!("{i}/{}", p.file_name().unwrap().to_string_lossy());
            files.push((name, std::fs::read(&p).unwrap()));
        }
    }
    files
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_suite(a.path());
    let second = run_suite(b.path());
    let differing: Vec<&str> =
        first.iter().zip(&second).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    outcome(
        !first.is_empty() && first.len() == second.len() && differing.is_empty(),
        format!("{} CSV files compared, {} differ", first.len(), differing.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("resolvent closed forms", closed_form_battery),
        ("splitting identity", splitting_identity),
        ("approximant properties", properties_suite),
        ("homogeneity transmission", homogeneity_transmission),
        ("degrees", degrees),
        ("scalar annulus search", scalar_annulus),
        ("elliptic demo", elliptic_demo),
        ("parabolic demo", parabolic_demo),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {}: {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
