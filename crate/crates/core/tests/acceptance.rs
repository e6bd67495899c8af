//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any of them fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pdff::analysis::{interaction_report, sensitivity, AnalysisConfig};
use pdff::arm::{default_targets, Morphology, MorphologyKind, TargetLayout, TargetSet};
use pdff::demo::{run_demo, DemoConfig};
use pdff::experiment::{run_campaign, Campaign, CampaignSettings};
use pdff::policy::Policy;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

struct Campaigns {
    human: Campaign,
    human_elapsed: Duration,
    equidistant: Campaign,
    inverted: Campaign,
}

fn run_all(targets: &TargetSet) -> Campaigns {
    let settings = CampaignSettings::default();
    let run = |kind| run_campaign(&Morphology::standard(kind), targets, &settings).unwrap();
    let start = Instant::now();
    let human = run(MorphologyKind::Human);
    let human_elapsed = start.elapsed();
    Campaigns {
        human,
        human_elapsed,
        equidistant: run(MorphologyKind::Equidistant),
        inverted: run(MorphologyKind::InvertedHuman),
    }
}

fn criterion_1(c: &Campaigns) -> Verdict {
    let r = &c.human.result;
    let j1 = r.peak(1);
    let (u2, u3) = (r.peak(2).peak_update, r.peak(3).peak_update);
    // Peaks of joints 4-6 taken over updates 2.. so that the uniform start
    // does not count.
    let distal: Vec<f64> = (3..6)
        .map(|m| {
            r.mean_relative[1..]
                .iter()
                .map(|row| row[m])
                .fold(0.0, f64::max)
        })
        .collect();
    let pass = r.sessions == 200
        && (0.40..=0.70).contains(&j1.peak_relative)
        && (3..=15).contains(&j1.peak_update)
        && j1.peak_update < u2
        && u2 < u3
        && distal.iter().all(|&p| p < 0.30)
        && c.human_elapsed < Duration::from_secs(600);
    verdict(
        pass,
        format!(
            "{} sessions; joint 1 peak {:.3} at update {}; joints 1-3 peak at {}/{}/{}; joints 4-6 peaks {:.3}/{:.3}/{:.3}; {:.1}s",
            r.sessions,
            j1.peak_relative,
            j1.peak_update,
            j1.peak_update,
            u2,
            u3,
            distal[0],
            distal[1],
            distal[2],
            c.human_elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2(c: &Campaigns) -> Verdict {
    let total = &c.human.result.mean_total;
    let (arg, max) = total
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        });
    let update = arg + 1;
    let start = total[0];
    let end = *total.last().unwrap();
    let pass = (10..=40).contains(&update) && end < 0.5 * max && (start - 0.30).abs() < 1e-12;
    verdict(
        pass,
        format!(
            "max total {max:.3} at update {update} (need 10-40); end/max {:.3}; start {start:.15}",
            end / max
        ),
    )
}

fn criterion_3(c: &Campaigns) -> Verdict {
    let eq = c.equidistant.result.top_peak();
    let inv = c.inverted.result.top_peak();
    let human = c.human.result.top_peak();
    let pass = eq.peak_relative <= 0.40
        && (inv.joint == 5 || inv.joint == 6)
        && inv.peak_relative >= 0.35
        && human.peak_relative > eq.peak_relative;
    verdict(
        pass,
        format!(
            "equidistant top joint {} = {:.3} (need <= 0.40); inverted top joint {} = {:.3} (need joint 5/6, >= 0.35); human top {:.3}",
            eq.joint, eq.peak_relative, inv.joint, inv.peak_relative, human.peak_relative
        ),
    )
}

fn criterion_4(targets: &TargetSet) -> Verdict {
    let arms: Vec<Morphology> = MorphologyKind::ALL
        .iter()
        .map(|&k| Morphology::standard(k))
        .collect();
    let report = sensitivity(&arms, targets, &AnalysisConfig::default());
    let bad: Vec<String> = report
        .rows
        .iter()
        .filter(|row| row.per_joint.windows(2).any(|w| w[1] > w[0]))
        .map(|row| row.morphology.to_string())
        .collect();
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            "per-joint sensitivity non-increasing for all morphologies".into()
        } else {
            format!("increasing somewhere for {}", bad.join(", "))
        },
    )
}

fn criterion_5(targets: &TargetSet) -> Verdict {
    let start = Instant::now();
    let arms: Vec<Morphology> = MorphologyKind::ALL
        .iter()
        .map(|&k| Morphology::standard(k))
        .collect();
    let cfg = AnalysisConfig::default();
    let report = interaction_report(&arms, targets, &cfg).unwrap();
    let med = |k| report.row(k).unwrap().median;
    let (h, e, i) = (
        med(MorphologyKind::Human),
        med(MorphologyKind::Equidistant),
        med(MorphologyKind::InvertedHuman),
    );
    let pair = report
        .row(MorphologyKind::Human)
        .unwrap()
        .ratio(1, 3)
        .unwrap();
    let pass = cfg.samples_per_target == 100
        && targets.len() == 20
        && (h - 0.89).abs() <= 0.07
        && (e - 0.79).abs() <= 0.07
        && (i - 0.70).abs() <= 0.07
        && h > e
        && e > i
        && (pair - 0.89).abs() <= 0.05;
    verdict(
        pass,
        format!(
            "medians {h:.3}/{e:.3}/{i:.3} (targets 0.89/0.79/0.70); human pair (1,3) {pair:.3}; {:.2}s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_6(c: &Campaigns) -> Verdict {
    let traces = &c.human.traces;
    let n = traces.len() as f64;
    let converged = traces.iter().filter(|t| t.final_distance < 0.05).count() as f64 / n;
    let monotone = traces
        .iter()
        .filter(|t| {
            let costs = t.cost_curve();
            costs.windows(11).all(|w| w[10] <= w[0])
        })
        .count() as f64
        / n;
    verdict(
        converged >= 0.90 && monotone >= 0.80,
        format!(
            "{:.1}% of sessions end within 0.05; {:.1}% never rise over a 10-update window",
            100.0 * converged,
            100.0 * monotone
        ),
    )
}

fn criterion_7() -> Verdict {
    let fk = common::fk_max_error(1000, 71);
    let update = common::update_max_error(500, 72);
    let affine = common::weights_affine_max_error(1000, 73);
    let monotone = common::weights_monotone(1000, 74);
    let rows: Vec<Vec<f64>> = (0..6)
        .map(|m| {
            (0..5)
                .map(|b| ((m * 5 + b) as f64 * 0.7).sin() * 10.0)
                .collect()
        })
        .collect();
    let ratio = common::rollout_refinement_ratio(&Policy::from_rows(&rows).unwrap(), 0.01);
    let dtw_bad = common::dtw_mismatches(5);
    let pass = fk < 1e-12
        && update < 1e-12
        && affine < 1e-12
        && monotone
        && (5.0..20.0).contains(&ratio)
        && dtw_bad == 0;
    verdict(
        pass,
        format!(
            "fk {fk:.1e}; update {update:.1e}; weights {affine:.1e}, monotone {monotone}; Euler error ratio dt/(dt/10) {ratio:.2}; dtw mismatches {dtw_bad}"
        ),
    )
}

fn criterion_8() -> Verdict {
    let seeds = 100;
    let one = DemoConfig {
        updates: 1,
        ..DemoConfig::default()
    };
    let descent = {
        let [x, y] = one.start;
        let n = (x * x + y * y).sqrt();
        [-x / n, -y / n]
    };
    let cos = (0..seeds)
        .map(|s| {
            let [ax, ay] = run_demo(&one, s).unwrap().snapshots[0].major_axis();
            (ax * descent[0] + ay * descent[1]).abs()
        })
        .sum::<f64>()
        / seeds as f64;
    let at_optimum = DemoConfig {
        start: [0.0, 0.0],
        ..one
    };
    let before = 2.0 * at_optimum.lambda_init;
    let after = (0..seeds)
        .map(|s| run_demo(&at_optimum, s).unwrap().snapshots[0].total_exploration())
        .sum::<f64>()
        / seeds as f64;
    verdict(
        cos >= 0.7 && after < before,
        format!("mean |cos| {cos:.3}; eigenvalue sum at optimum {before:.2} -> {after:.3}"),
    )
}

fn main() -> ExitCode {
    let targets = default_targets(&TargetLayout::default()).unwrap();
    let campaigns = run_all(&targets);
    let results = [
        (
            "1 proximodistal freeing, human arm",
            criterion_1(&campaigns),
        ),
        (
            "2 rise and fall of total exploration",
            criterion_2(&campaigns),
        ),
        ("3 morphology contrast", criterion_3(&campaigns)),
        (
            "4 sensitivity monotone in joint index",
            criterion_4(&targets),
        ),
        ("5 interaction medians", criterion_5(&targets)),
        ("6 convergence", criterion_6(&campaigns)),
        ("7 oracle suites", criterion_7()),
        ("8 two-dimensional demo", criterion_8()),
    ];
    let mut failed = 0;
    for (name, v) in &results {
        println!(
            "criterion {name}: {} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
