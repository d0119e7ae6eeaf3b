//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use explorer_core::bebu::{
    backward_targets, BackwardTables, MaskMode, QTable, StrategyRegistry, TargetParams, TraceRow,
    Trainer, TrainerConfig,
};
use explorer_core::ensemble::{init_net, ParamSet};
use explorer_core::envs::maze::{self, generate_maze, shortest_path_length, EnvState};
use explorer_core::envs::{LinearMdpSpec, MazeEnv, MazeSpec};
use explorer_core::linalg::Matrix;
use explorer_core::lsvi::run_lsvi_ucb;
use explorer_core::seed::{derive_rng, rng_from};
use explorer_harness::config::ExperimentConfig;
use explorer_harness::output::read_csv;
use explorer_harness::suites::bonus::{bonus_curve, summarize};
use explorer_harness::suites::lsvi_verify::run_lsvi_verify;
use explorer_harness::suites::maze::{run_dir, run_maze_suite, MazeSummary};
use explorer_harness::suites::regress_demo::run_regress_demo;
use rand::Rng as _;
use tempfile::TempDir;

type Outcome = (bool, String);

// ---------------------------------------------------------------- 1

fn posterior_equivalence() -> Outcome {
    let dir = TempDir::new().unwrap();
    let cfg = ExperimentConfig {
        out: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let (report, rows, boot) = run_lsvi_verify(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let random = rows.iter().filter(|r| r.kind == "random").count();
    let shapes_ok = rows
        .iter()
        .filter(|r| r.kind == "random")
        .all(|r| r.dim <= 8 && r.points <= 100 && [0.1, 1.0, 10.0].contains(&r.lambda));
    let boot_ok = boot.iter().all(|r| r.points == 500);
    let ok = random >= 20
        && shapes_ok
        && boot_ok
        && report.passed
        && report.max_rel_error <= 0.05
        && report.bootstrap_passed
        && report.bootstrap_max_rel_error <= 0.15
        && secs < 60.0;
    (
        ok,
        format!(
            "{random} random designs, max rel err {:.4} (tol 0.05); bootstrap max rel err {:.4} (tol 0.15); {secs:.1}s",
            report.max_rel_error, report.bootstrap_max_rel_error
        ),
    )
}

// ---------------------------------------------------------------- 2

/// Per-step recursion written directly from the update rules, one head at a
/// time, with the diffusion applied to a private copy of the head's table.
fn reference_targets(
    rewards: &[f64],
    actions: &[usize],
    q0: &[Vec<Vec<f64>>],
    b: &[f64],
    bt: &[Vec<f64>],
    p: (f64, f64, f64, f64),
) -> Vec<Vec<f64>> {
    fn target(
        t: usize,
        q: &mut Vec<Vec<f64>>,
        k: usize,
        ctx: (&[f64], &[usize], &[f64], &[Vec<f64>]),
        p: (f64, f64, f64, f64),
        out: &mut Vec<f64>,
    ) -> f64 {
        let (rewards, actions, b, bt) = ctx;
        let (a1, a2, beta, gamma) = p;
        let last = rewards.len() - 1;
        let y = if t == last {
            rewards[t] + a1 * b[t]
        } else {
            let y_next = target(t + 1, q, k, ctx, p, out);
            let an = actions[t + 1];
            q[an][t] = beta * y_next + (1.0 - beta) * q[an][t];
            let mut best = 0;
            for a in 1..q.len() {
                if q[a][t] > q[best][t] {
                    best = a;
                }
            }
            let mask = if best != an { 1.0 } else { 0.0 };
            rewards[t] + a1 * b[t] + gamma * (q[best][t] + a2 * mask * bt[k][t])
        };
        out[t] = y;
        y
    }
    (0..q0.len())
        .map(|k| {
            let mut q = q0[k].clone();
            let mut out = vec![0.0; rewards.len()];
            target(0, &mut q, k, (rewards, actions, b, bt), p, &mut out);
            out
        })
        .collect()
}

fn backward_oracle() -> Outcome {
    let mut rng = rng_from(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (k, na, t) = (
            rng.random_range(1..=4),
            rng.random_range(1..=4),
            rng.random_range(1..=8),
        );
        let rewards: Vec<f64> = (0..t).map(|_| rng.random_range(-2.0..2.0)).collect();
        let actions: Vec<usize> = (0..t).map(|_| rng.random_range(0..na)).collect();
        // Coarse values make argmax ties common.
        let q0: Vec<Vec<Vec<f64>>> = (0..k)
            .map(|_| {
                (0..na)
                    .map(|_| (0..t).map(|_| rng.random_range(-3..=3) as f64 * 0.5).collect())
                    .collect()
            })
            .collect();
        let b: Vec<f64> = (0..t).map(|_| rng.random_range(0.0..1.0)).collect();
        let bt: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..t).map(|_| rng.random_range(0.0..2.0)).collect())
            .collect();
        let p = (
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..=1.0),
            rng.random_range(0.0..1.0),
        );

        let mut qt = QTable::zeros(k, na, t);
        for h in 0..k {
            for a in 0..na {
                for s in 0..t {
                    qt.set(h, a, s, q0[h][a][s]);
                }
            }
        }
        let bt_m = Matrix::from_rows(&bt, t).unwrap();
        let tables = BackwardTables::from_parts(qt, b.clone(), bt_m, &actions).unwrap();
        let params = TargetParams {
            alpha1: p.0,
            alpha2: p.1,
            beta: p.2,
            gamma: p.3,
            mask_mode: MaskMode::PostDiffusion,
        };
        let y = backward_targets(&rewards, &actions, &tables, &params).unwrap();
        let reference = reference_targets(&rewards, &actions, &q0, &b, &bt, p);
        for h in 0..k {
            for s in 0..t {
                worst = worst.max((y.get(h, s) - reference[h][s]).abs());
            }
        }
    }
    (worst <= 1e-10, format!("200 random episodes, max abs diff {worst:e} (tol 1e-10)"))
}

// ---------------------------------------------------------------- 3

fn reduction_identity() -> Outcome {
    let spec = generate_maze(77, 0.3).unwrap();
    let base = TrainerConfig {
        heads: 4,
        hidden: vec![16, 16],
        total_frames: 4000,
        learning_starts: 1000,
        train_frequency: 20,
        target_sync_period: 500,
        alpha1: 0.0,
        alpha2: 0.0,
        ..TrainerConfig::default()
    };
    let registry = StrategyRegistry::with_defaults();
    let make = |variant: &str| {
        let cfg = TrainerConfig {
            variant: variant.into(),
            ..base.clone()
        };
        Trainer::new(MazeEnv::new(spec.clone()).unwrap(), cfg, 5, &registry).unwrap()
    };
    let (mut ob2i, mut bebu) = (make("ob2i"), make("bebu"));
    let mut compared = 0;
    for frame in 1..=base.total_frames {
        ob2i.run_until(frame).unwrap();
        bebu.run_until(frame).unwrap();
        if ob2i.train_steps() != bebu.train_steps() {
            return (false, format!("train step counts diverged at frame {frame}"));
        }
        if let (Some(a), Some(b)) = (ob2i.last_train(), bebu.last_train()) {
            if a.loss.to_bits() != b.loss.to_bits() {
                return (false, format!("loss differs at frame {frame}"));
            }
            let same = a
                .targets
                .as_slice()
                .iter()
                .zip(b.targets.as_slice())
                .all(|(x, y)| x.to_bits() == y.to_bits());
            if !same || a.targets.rows() != b.targets.rows() || a.targets.cols() != b.targets.cols() {
                return (false, format!("targets differ at frame {frame}"));
            }
            compared += 1;
        }
    }
    let actions = |t: &Trainer<MazeEnv>| -> Vec<Vec<usize>> {
        t.episodes().iter().map(|e| e.actions.clone()).collect()
    };
    let same_actions = actions(&ob2i) == actions(&bebu);
    let same_net = ob2i.net().flat().iter().zip(bebu.net().flat().iter()).all(|(a, b)| a.to_bits() == b.to_bits());
    let steps = ob2i.train_steps();
    (
        same_actions && same_net && steps > 0,
        format!(
            "{steps} training steps, losses and targets bit-identical at every frame ({compared} frame checks), actions identical: {same_actions}, final nets identical: {same_net}"
        ),
    )
}

// ---------------------------------------------------------------- 4

fn gradient_check() -> Outcome {
    let mut rng = rng_from(404);
    let h = 1e-5;
    let mut worst_ratio: f64 = 0.0;
    let mut entries = 0;
    let mut probes = 0;
    while probes < 50 {
        let input = rng.random_range(2..=5);
        let depth = rng.random_range(1..=2);
        let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(2..=6)).collect();
        let actions = rng.random_range(2..=4);
        let heads = rng.random_range(2..=4);
        let net = init_net(input, &hidden, actions, heads, rng.random()).unwrap();
        if net.param_count() > 200 {
            continue;
        }
        probes += 1;
        let t = rng.random_range(1..=6);
        let states: Vec<Vec<f64>> = (0..t)
            .map(|_| (0..input).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let acts: Vec<usize> = (0..t).map(|_| rng.random_range(0..actions)).collect();
        let targets = Matrix::from_vec(
            heads,
            t,
            (0..heads * t).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap();
        let (_, grads) = net.loss_and_gradients(&states, &acts, &targets).unwrap();
        let analytic = grads.flat();
        let base = net.flat();
        let loss_at = |flat: &[f64]| {
            let mut probe = net.clone();
            let mut off = 0;
            for tensor in probe.tensors_mut() {
                tensor.copy_from_slice(&flat[off..off + tensor.len()]);
                off += tensor.len();
            }
            probe.loss_and_gradients(&states, &acts, &targets).unwrap().0
        };
        for i in 0..base.len() {
            let mut plus = base.clone();
            plus[i] += h;
            let mut minus = base.clone();
            minus[i] -= h;
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            let allowed = (1e-4 * numeric.abs().max(analytic[i].abs())).max(1e-7);
            worst_ratio = worst_ratio.max((numeric - analytic[i]).abs() / allowed);
            entries += 1;
        }
    }
    (
        worst_ratio <= 1.0,
        format!(
            "50 random nets (<= 200 params), {entries} gradient entries, worst error/tolerance ratio {worst_ratio:.2e} (1e-4 rel, 1e-7 abs floor)"
        ),
    )
}

// ---------------------------------------------------------------- 5 and 7

struct MazeSuite {
    dir: TempDir,
    summary: MazeSummary,
    learning_starts: u64,
    secs: f64,
}

fn maze_suite() -> MazeSuite {
    let dir = TempDir::new().unwrap();
    let mut cfg = ExperimentConfig {
        out: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    cfg.seeds = 10;
    cfg.maze.densities = vec![0.3];
    cfg.maze.variants = vec!["bebu".into(), "ob2i".into()];
    let start = Instant::now();
    let (summary, _) = run_maze_suite(&cfg).unwrap();
    MazeSuite {
        dir,
        summary,
        learning_starts: cfg.maze.trainer.learning_starts,
        secs: start.elapsed().as_secs_f64(),
    }
}

fn maze_ordering(suite: &MazeSuite) -> Outcome {
    let bebu = suite.summary.group("bebu", 0.3).unwrap();
    let ob2i = suite.summary.group("ob2i", 0.3).unwrap();
    let wins = ob2i
        .relative_lengths
        .iter()
        .zip(&bebu.relative_lengths)
        .filter(|(o, b)| o <= b)
        .count();
    let ok = wins >= 7 && ob2i.mean_relative_length < bebu.mean_relative_length;
    (
        ok,
        format!(
            "H=50k, density 0.3: OB2I <= BEBU on {wins}/10 paired seeds (need 7); mean OB2I {:.2} vs BEBU {:.2} (need strictly lower); suite took {:.0}s",
            ob2i.mean_relative_length, bebu.mean_relative_length, suite.secs
        ),
    )
}

fn bonus_trend(suite: &MazeSuite) -> Outcome {
    let window = ExperimentConfig::default().bonus_trace.window;
    let mut passing = 0;
    let mut shapes = Vec::new();
    for i in 0..10 {
        let path = run_dir(suite.dir.path(), "ob2i", 0.3, i).join("trace.csv");
        let trace: Vec<TraceRow> = read_csv(&path).unwrap();
        let s = summarize(&bonus_curve(&trace, window), window, suite.learning_starts);
        if s.rise_then_fall == Some(true) {
            passing += 1;
        }
        shapes.push(match (s.peak, s.final_smoothed) {
            (Some(p), Some(f)) => format!("{:.2}", f / p),
            _ => "n/a".into(),
        });
    }
    (
        passing >= 7,
        format!(
            "rise-then-fall on {passing}/10 OB2I seeds (need 7); final/peak ratios [{}]",
            shapes.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- 6

fn lsvi_policy() -> Outcome {
    // From state 0, action 0 pays 0.5 at once while action 1 leads to state
    // 1 where reward 1 is collected every step: the myopic choice is wrong,
    // and the lowest-index tie-break of the untrained policy starts on it.
    let to = |s: usize| {
        let mut p = vec![0.0; 3];
        p[s] = 1.0;
        p
    };
    let kernel = vec![
        vec![to(2), to(1)],
        vec![to(0), to(1)],
        vec![to(0), to(2)],
    ];
    let rewards = vec![vec![0.5, 0.0], vec![0.0, 1.0], vec![0.0, 0.1]];
    let spec = LinearMdpSpec::tabular(&kernel, &rewards, 3, 0).unwrap();
    // An unvisited pair must look at least as good as the best return, so
    // the bonus scale is the horizon.
    let alpha = spec.horizon as f64;
    let (q_star, v_star) = spec.optimal_values();
    let run = run_lsvi_ucb(&spec, 200, 1.0, alpha, &mut rng_from(6)).unwrap();

    // Follow the greedy policy; along the way it must pick an optimal action.
    let mut s = spec.initial_state;
    let mut value = 0.0;
    let mut matches = true;
    for t in 0..spec.horizon {
        let a = run.policy(&spec, t, s).unwrap();
        let best = q_star[t][s].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        matches &= (q_star[t][s][a] - best).abs() < 1e-12;
        value += spec.mean_reward(s, a);
        s = kernel[s][a].iter().position(|&p| p == 1.0).unwrap();
    }
    let v0 = v_star[0][spec.initial_state];
    let avg = |r: &[explorer_core::lsvi::LsviEpisodeLog]| r.iter().map(|l| l.regret).sum::<f64>() / r.len() as f64;
    let (first, last) = (avg(&run.log[..50]), avg(&run.log[150..]));
    let ok = matches && (value - v0).abs() < 1e-12 && last < first;
    (
        ok,
        format!(
            "greedy path optimal: {matches}, greedy value {value:.3} vs V* {v0:.3}; mean regret first 50 {first:.3}, last 50 {last:.3}"
        ),
    )
}

// ---------------------------------------------------------------- 8

fn regression_demo() -> Outcome {
    let dir = TempDir::new().unwrap();
    let cfg = ExperimentConfig {
        out: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let report = run_regress_demo(&cfg).unwrap();
    let ratios: Vec<String> = report
        .seeds
        .iter()
        .map(|s| format!("{:.1}", s.gap_std / s.support_std))
        .collect();
    let n = report.seeds.len();
    (
        n == 10 && report.gap_exceeds_support >= 8 && report.g_plus_dominates == n,
        format!(
            "gap std > support std on {}/{n} seeds (need 8), ratios [{}]; g+ >= mean everywhere on {}/{n}",
            report.gap_exceeds_support,
            ratios.join(", "),
            report.g_plus_dominates
        ),
    )
}

// ---------------------------------------------------------------- 9

fn environment_statistics() -> Outcome {
    let spec = MazeSpec::empty(10, 10);
    let mut rng = derive_rng(9, &[0]);
    let n = 100_000;
    let mut counts = BTreeMap::new();
    for _ in 0..n {
        let state = EnvState {
            position: (5, 5),
            steps_taken: 0,
            done: false,
            encoded: Vec::new(),
        };
        // Action 1 moves right; slips go up or down.
        let out = maze::step(&spec, &state, 1, &mut rng).unwrap();
        *counts.entry(out.state.position).or_insert(0usize) += 1;
    }
    let freq = |cell| *counts.get(&cell).unwrap_or(&0) as f64 / n as f64;
    let (right, up, down) = (freq((5, 6)), freq((4, 5)), freq((6, 5)));
    let slip_ok = (right - 0.8).abs() <= 0.01
        && (up - 0.1).abs() <= 0.01
        && (down - 0.1).abs() <= 0.01
        && counts.len() == 3;

    let mut unsolvable = 0;
    for density in [0.3, 0.4, 0.5] {
        for seed in 0..1000 {
            let solvable = generate_maze(seed, density)
                .and_then(|m| shortest_path_length(&m))
                .is_ok();
            unsolvable += usize::from(!solvable);
        }
    }
    (
        slip_ok && unsolvable == 0,
        format!(
            "slip frequencies ({right:.4}, {up:.4}, {down:.4}) over 1e5 steps; {unsolvable} unsolvable mazes over 3x1000 seeds"
        ),
    )
}

// ---------------------------------------------------------------- 10

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_explorer"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn cli_determinism() -> Outcome {
    let root = TempDir::new().unwrap();
    let config = root.path().join("config.json");
    let maze_dir = root.path().join("maze-for-eval");
    let doc = serde_json::json!({
        "seeds": 1,
        "maze": {
            "trainer": {"total_frames": 1500, "learning_starts": 500, "train_frequency": 50,
                        "target_sync_period": 500, "heads": 3, "hidden": [16]},
            "max_steps": 200, "eval_interval": 500, "eval_episodes": 2
        },
        "lsvi_verify": {"designs": 3, "samples": 20000, "bootstrap_designs": 1,
                        "bootstrap_replicates": 200},
        "regress_demo": {"fit": {"members": 3, "epochs": 100, "hidden": [8], "grid_points": 21}},
        "bonus_trace": {"window": 5},
        "eval": {"episodes": 3, "run_dir": run_dir(&maze_dir, "ob2i", 0.3, 0)}
    });
    fs::write(&config, doc.to_string()).unwrap();
    let cfg = config.to_str().unwrap();
    run_cli(&["maze-run", "--config", cfg, "--out", maze_dir.to_str().unwrap()]);

    let mut details = Vec::new();
    let mut ok = true;
    for sub in ["maze-run", "lsvi-verify", "regress-demo", "bonus-trace", "eval"] {
        let out = root.path().join(sub);
        let args = ["--config", cfg, "--out", out.to_str().unwrap(), "--seed", "3"];
        let mut runs = Vec::new();
        for _ in 0..2 {
            let _ = fs::remove_dir_all(&out);
            let stdout = run_cli(&[&[sub][..], &args[..]].concat());
            runs.push((stdout, snapshot(&out)));
        }
        let same = runs[0] == runs[1];
        ok &= same && !runs[0].1.is_empty();
        details.push(format!("{sub}: {} files {}", runs[0].1.len(), if same { "identical" } else { "DIFFER" }));
    }
    (ok, details.join("; "))
}

fn main() {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, (ok, detail): Outcome| {
        println!("{} criterion {id} ({name}): {detail}", if ok { "PASS" } else { "FAIL" });
        failures += usize::from(!ok);
    };
    report(1, "posterior equivalence", posterior_equivalence());
    report(2, "backward-target oracle", backward_oracle());
    report(3, "reduction identity", reduction_identity());
    report(4, "gradient correctness", gradient_check());
    let suite = maze_suite();
    report(5, "maze ordering", maze_ordering(&suite));
    report(6, "LSVI-UCB policy", lsvi_policy());
    report(7, "bonus trend", bonus_trend(&suite));
    report(8, "regression demo", regression_demo());
    report(9, "environment statistics", environment_statistics());
    report(10, "CLI determinism", cli_determinism());
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
