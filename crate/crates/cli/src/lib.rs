//! Command-line surface: state and game ingestion, the demo fixture table,
//! and machine-readable verdicts.
//!
//! Exit codes: 0 = success / Better / feasible, 3 = NotBetter / Infeasible,
//! 2 = Indeterminate, 1 = input or internal error.

use blackwell_core::channels::{is_completely_positive, is_trace_preserving, solve_local_map};
use blackwell_core::compare::{
    classical_better, compare_with, ClassicalComparison, CompareOptions, ComparisonVerdict,
};
use blackwell_core::formats::{
    parse_classical_csv, to_json, ClassicalReport, GameFile, StateFile, VerdictReport,
};
use blackwell_core::games::{optimal_payoff_with, random_game, spin_guess_game, SolverOptions};
use blackwell_core::states::{builtin_structure, mutual_information, InformationStructure};
use blackwell_core::teleport::teleport_roundtrip;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INDETERMINATE: i32 = 2;
pub const EXIT_NOT_BETTER: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "blackwell",
    about = "Decides the Blackwell order between quantum information structures: \
             constructs a transforming channel or a certified witness game."
)]
struct Cli {
    /// Feasibility tolerance and solver duality-gap target.
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol: f64,
    /// Seed for seeded sweeps (demo).
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Override the iteration caps of the feasibility, witness, and payoff
    /// solvers.
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a built-in structure (singlet, product-mixed, upsilon,
    /// upsilon-prime, bell, sec6-phi, sec6-psi) as a state file.
    GenState {
        name: String,
        /// Local dimension for `bell` / tomography dimension for `sec6-*`.
        param: Option<usize>,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal expected payoff of a structure in a game.
    Payoff { structure: PathBuf, game: PathBuf },
    /// Decide the order between two structures.
    Compare { a: PathBuf, b: PathBuf },
    /// Mutual information of a structure, in bits.
    MutualInfo { structure: PathBuf },
    /// Teleportation roundtrip distance for a structure.
    TeleportCheck { structure: PathBuf },
    /// Classical garbling feasibility between two CSV tables.
    ClassicalCompare { p: PathBuf, q: PathBuf },
    /// Run the built-in fixture table.
    Demo,
}

struct Config {
    tol: f64,
    seed: u64,
    max_iter: Option<usize>,
    format: Format,
}

impl Config {
    fn compare_options(&self) -> CompareOptions {
        let mut opts = CompareOptions {
            tol: self.tol,
            ..CompareOptions::default()
        };
        if let Some(cap) = self.max_iter {
            opts.feasibility_cap = cap;
            opts.witness.max_iterations = cap;
            opts.witness.solver_cap = cap;
        }
        opts
    }

    fn solver_options(&self) -> SolverOptions {
        let mut opts = SolverOptions {
            tol: self.tol,
            ..SolverOptions::default()
        };
        if let Some(cap) = self.max_iter {
            opts.max_iterations = cap;
        }
        opts
    }
}

/// Runs the CLI against explicit argument and output streams; returns the
/// exit code.
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_ERROR
                }
            };
        }
    };
    if cli.tol <= 0.0 || !cli.tol.is_finite() {
        let _ = writeln!(err, "error: --tol must be a positive number");
        return EXIT_ERROR;
    }
    if cli.max_iter == Some(0) {
        let _ = writeln!(err, "error: --max-iter must be at least 1");
        return EXIT_ERROR;
    }
    let config = Config {
        tol: cli.tol,
        seed: cli.seed,
        max_iter: cli.max_iter,
        format: cli.format,
    };
    match dispatch(&cli.command, &config, out) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: &Command, config: &Config, out: &mut dyn Write) -> Result<i32, String> {
    match cmd {
        Command::GenState {
            name,
            param,
            out: path,
        } => gen_state(name, *param, path.as_deref(), config, out),
        Command::Payoff { structure, game } => payoff_cmd(structure, game, config, out),
        Command::Compare { a, b } => compare_cmd(a, b, config, out),
        Command::MutualInfo { structure } => mutual_info_cmd(structure, config, out),
        Command::TeleportCheck { structure } => teleport_cmd(structure, config, out),
        Command::ClassicalCompare { p, q } => classical_cmd(p, q, config, out),
        Command::Demo => demo(config, out),
    }
}

fn read_to_string(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_structure(path: &Path) -> Result<InformationStructure, String> {
    let text = read_to_string(path)?;
    let file: StateFile = serde_json::from_str(&text).map_err(|e| {
        format!(
            "{}: line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        )
    })?;
    file.to_structure()
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(config: &Config, out: &mut dyn Write, json: String, text: String) -> Result<(), String> {
    let body = match config.format {
        Format::Json => json,
        Format::Text => text,
    };
    writeln!(out, "{body}").map_err(|e| e.to_string())
}

fn gen_state(
    name: &str,
    param: Option<usize>,
    path: Option<&Path>,
    config: &Config,
    out: &mut dyn Write,
) -> Result<i32, String> {
    let s = builtin_structure(name, param).map_err(|e| e.to_string())?;
    let json = to_json(&StateFile::from_structure(&s)).map_err(|e| e.to_string())?;
    match path {
        Some(p) => {
            std::fs::write(p, json.as_bytes()).map_err(|e| format!("{}: {e}", p.display()))?;
            if config.format == Format::Text {
                writeln!(out, "wrote {name} to {}", p.display()).map_err(|e| e.to_string())?;
            }
        }
        None => writeln!(out, "{json}").map_err(|e| e.to_string())?,
    }
    Ok(EXIT_OK)
}

#[derive(serde::Serialize)]
struct PayoffReport {
    value: f64,
    gap: f64,
    iterations: usize,
}

fn payoff_cmd(
    structure: &Path,
    game_path: &Path,
    config: &Config,
    out: &mut dyn Write,
) -> Result<i32, String> {
    let s = load_structure(structure)?;
    let text = read_to_string(game_path)?;
    let file: GameFile = serde_json::from_str(&text).map_err(|e| {
        format!(
            "{}: line {} column {}: {e}",
            game_path.display(),
            e.line(),
            e.column()
        )
    })?;
    let game = file
        .to_game()
        .map_err(|e| format!("{}: {e}", game_path.display()))?;
    let (report, code) = match optimal_payoff_with(&s, &game, &config.solver_options()) {
        Ok(r) => (
            PayoffReport {
                value: r.value,
                gap: r.gap,
                iterations: r.iterations,
            },
            EXIT_OK,
        ),
        Err(blackwell_core::games::GameError::MaxIterations { result, .. }) => (
            PayoffReport {
                value: result.value,
                gap: result.gap,
                iterations: result.iterations,
            },
            EXIT_INDETERMINATE,
        ),
        Err(e) => return Err(e.to_string()),
    };
    let json = to_json(&report).map_err(|e| e.to_string())?;
    let mut text = format!(
        "optimal payoff: {:.12}\nduality gap:    {:.3e}\niterations:     {}",
        report.value, report.gap, report.iterations
    );
    if code == EXIT_INDETERMINATE {
        text.push_str("\nwarning: solver hit its iteration cap; value is a lower bound");
    }
    emit(config, out, json, text)?;
    Ok(code)
}

fn compare_cmd(a: &Path, b: &Path, config: &Config, out: &mut dyn Write) -> Result<i32, String> {
    let phi = load_structure(a)?;
    let psi = load_structure(b)?;
    let verdict = compare_with(&phi, &psi, &config.compare_options()).map_err(|e| e.to_string())?;
    let report = VerdictReport::from_verdict(&verdict);
    let json = to_json(&report).map_err(|e| e.to_string())?;
    let text = describe_verdict(&verdict);
    emit(config, out, json, text)?;
    Ok(match verdict {
        ComparisonVerdict::Better { .. } => EXIT_OK,
        ComparisonVerdict::NotBetter { .. } => EXIT_NOT_BETTER,
        ComparisonVerdict::Indeterminate { .. } => EXIT_INDETERMINATE,
    })
}

fn describe_verdict(v: &ComparisonVerdict) -> String {
    let d = v.diagnostics();
    let mut text = String::new();
    match v {
        ComparisonVerdict::Better { channel, .. } => {
            let _ = writeln!(
                text,
                "verdict: better (a channel transforms the first structure into the second)"
            );
            let _ = writeln!(text, "kraus rank: {}", channel.kraus_ops().len());
        }
        ComparisonVerdict::NotBetter {
            margin,
            payoff_phi,
            payoff_psi,
            witness,
            ..
        } => {
            let _ = writeln!(text, "verdict: not better (witness game found)");
            let _ = writeln!(
                text,
                "witness: {} actions, environment {}x{}",
                witness.action_count(),
                witness.env_a_dim(),
                witness.env_b_dim()
            );
            let _ = writeln!(
                text,
                "payoffs: first {payoff_phi:.9}, second {payoff_psi:.9}, margin {margin:.3e}"
            );
        }
        ComparisonVerdict::Indeterminate { .. } => {
            let _ = writeln!(text, "verdict: indeterminate");
        }
    }
    let _ = writeln!(
        text,
        "mutual information: first {:.9}, second {:.9}",
        d.mutual_information_phi, d.mutual_information_psi
    );
    if let Some(dist) = d.feasibility_distance {
        let _ = writeln!(text, "feasibility distance: {dist:.3e}");
    }
    for note in &d.notes {
        let _ = writeln!(text, "note: {note}");
    }
    text.trim_end().to_string()
}

#[derive(serde::Serialize)]
struct ScalarReport {
    value: f64,
}

fn mutual_info_cmd(structure: &Path, config: &Config, out: &mut dyn Write) -> Result<i32, String> {
    let s = load_structure(structure)?;
    let mi = mutual_information(&s).map_err(|e| e.to_string())?;
    let json = to_json(&ScalarReport { value: mi }).map_err(|e| e.to_string())?;
    emit(
        config,
        out,
        json,
        format!("mutual information: {mi:.12} bits"),
    )?;
    Ok(EXIT_OK)
}

#[derive(serde::Serialize)]
struct TeleportReport {
    distance: f64,
    passed: bool,
}

fn teleport_cmd(structure: &Path, config: &Config, out: &mut dyn Write) -> Result<i32, String> {
    let s = load_structure(structure)?;
    let distance = teleport_roundtrip(&s).map_err(|e| e.to_string())?;
    let passed = distance <= 1e-10;
    let json = to_json(&TeleportReport { distance, passed }).map_err(|e| e.to_string())?;
    let status = if passed { "pass" } else { "FAIL" };
    emit(
        config,
        out,
        json,
        format!("teleport roundtrip distance: {distance:.3e} ({status})"),
    )?;
    Ok(if passed { EXIT_OK } else { EXIT_ERROR })
}

fn classical_cmd(p: &Path, q: &Path, config: &Config, out: &mut dyn Write) -> Result<i32, String> {
    let pt =
        parse_classical_csv(&read_to_string(p)?).map_err(|e| format!("{}: {e}", p.display()))?;
    let qt =
        parse_classical_csv(&read_to_string(q)?).map_err(|e| format!("{}: {e}", q.display()))?;
    let outcome = classical_better(&pt, &qt, config.tol).map_err(|e| e.to_string())?;
    let report = ClassicalReport::from_comparison(&outcome);
    let json = to_json(&report).map_err(|e| e.to_string())?;
    let (text, code) = match &outcome {
        ClassicalComparison::Feasible(f) => {
            let mut t = String::from("feasible: garbling matrix\n");
            for row in f.entries() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
                let _ = writeln!(t, "  [{}]", cells.join(", "));
            }
            (t.trim_end().to_string(), EXIT_OK)
        }
        ClassicalComparison::Infeasible(cert) => (
            format!(
                "infeasible: separating game with {} actions, margin {:.3e}",
                cert.payoffs.len(),
                cert.margin
            ),
            EXIT_NOT_BETTER,
        ),
    };
    emit(config, out, json, text)?;
    Ok(code)
}

fn demo(config: &Config, out: &mut dyn Write) -> Result<i32, String> {
    let mut all_ok = true;
    let mut row =
        |out: &mut dyn Write, ok: bool, label: &str, detail: String| -> Result<(), String> {
            all_ok &= ok;
            let status = if ok { "PASS" } else { "FAIL" };
            writeln!(out, "{status}  {label:<52} {detail}").map_err(|e| e.to_string())
        };
    let builtin = |name: &str| builtin_structure(name, None).map_err(|e| e.to_string());
    let solver = config.solver_options();

    // spin-guess payoff table
    let payoff_cases: &[(&str, [f64; 3], f64)] = &[
        ("singlet", [0.0, 0.0, 1.0], 1.0),
        ("singlet", [1.0, 0.0, 0.0], 1.0),
        ("singlet", [0.0, 1.0, 0.0], 1.0),
        ("product-mixed", [0.0, 0.0, 1.0], 0.0),
        ("upsilon", [0.0, 0.0, 1.0], 1.0),
        ("upsilon", [1.0, 0.0, 0.0], 0.0),
        ("upsilon-prime", [1.0, 0.0, 0.0], 1.0),
        ("upsilon-prime", [0.0, 0.0, 1.0], 0.0),
    ];
    for (name, axis, expected) in payoff_cases {
        let s = builtin(name)?;
        let g = spin_guess_game(*axis).map_err(|e| e.to_string())?;
        let r = optimal_payoff_with(&s, &g, &solver).map_err(|e| e.to_string())?;
        let ok = (r.value - expected).abs() <= 1e-6;
        row(
            out,
            ok,
            &format!("spin-guess {name} axis {axis:?}"),
            format!("value {:.9} expected {expected}", r.value),
        )?;
    }

    // comparison chain
    let opts = config.compare_options();
    for (a, b, expect) in [
        ("singlet", "product-mixed", "better"),
        ("singlet", "upsilon", "better"),
        ("upsilon", "product-mixed", "better"),
        ("product-mixed", "singlet", "not_better"),
        ("upsilon", "singlet", "not_better"),
        ("upsilon", "upsilon-prime", "not_better"),
        ("upsilon-prime", "upsilon", "not_better"),
    ] {
        let verdict = compare_with(&builtin(a)?, &builtin(b)?, &opts).map_err(|e| e.to_string())?;
        let ok = verdict.kind() == expect;
        let detail = match &verdict {
            ComparisonVerdict::NotBetter { margin, .. } => {
                format!("kind {} margin {margin:.3e}", verdict.kind())
            }
            _ => format!("kind {}", verdict.kind()),
        };
        row(out, ok, &format!("compare {a} -> {b}"), detail)?;
    }

    // mutual information values
    for (name, expected) in [
        ("singlet", 2.0),
        ("product-mixed", 0.0),
        ("upsilon", 1.0),
        ("upsilon-prime", 1.0),
    ] {
        let mi = mutual_information(&builtin(name)?).map_err(|e| e.to_string())?;
        let ok = (mi - expected).abs() <= 1e-9;
        row(
            out,
            ok,
            &format!("mutual information {name}"),
            format!("{mi:.9} expected {expected}"),
        )?;
    }

    // teleportation roundtrips
    let mut worst = 0.0f64;
    for i in 0..5 {
        let s = blackwell_core::states::random_structure(config.seed + i, 2, 2);
        worst = worst.max(teleport_roundtrip(&s).map_err(|e| e.to_string())?);
    }
    let qutrit = blackwell_core::states::random_structure(config.seed + 100, 3, 3);
    worst = worst.max(teleport_roundtrip(&qutrit).map_err(|e| e.to_string())?);
    row(
        out,
        worst <= 1e-10,
        "teleport roundtrip (5 qubit + 1 qutrit states)",
        format!("worst distance {worst:.3e}"),
    )?;

    // tomography pair: unique local map is the transpose
    let phi6 = builtin_structure("sec6-phi", Some(2)).map_err(|e| e.to_string())?;
    let psi6 = builtin_structure("sec6-psi", Some(2)).map_err(|e| e.to_string())?;
    let sop = solve_local_map(&phi6, &psi6).map_err(|e| e.to_string())?;
    let (cp, min_eig) = is_completely_positive(&sop).map_err(|e| e.to_string())?;
    let (tp, _) = is_trace_preserving(&sop).map_err(|e| e.to_string())?;
    row(
        out,
        !cp && tp && (min_eig + 1.0).abs() <= 1e-9,
        "tomography pair: local map TP but not CP",
        format!("min choi eigenvalue {min_eig:.9}"),
    )?;

    let mut sweep_ok = true;
    let mut sweep_worst = 0.0f64;
    for i in 0..20 {
        let k = 2 + (i as usize % 3);
        let g = random_game(config.seed + 200 + i, (1, 1, 2), k, 1.0);
        let rp = optimal_payoff_with(&phi6, &g, &solver).map_err(|e| e.to_string())?;
        let rq = optimal_payoff_with(&psi6, &g, &solver).map_err(|e| e.to_string())?;
        let slack = rp.value - rq.value;
        sweep_worst = sweep_worst.min(slack);
        sweep_ok &= slack >= -1e-7;
    }
    row(
        out,
        sweep_ok,
        "tomography pair: 20 trivial-environment games",
        format!("worst payoff slack {sweep_worst:.3e}"),
    )?;

    let verdict = compare_with(&phi6, &psi6, &opts).map_err(|e| e.to_string())?;
    let ok = matches!(&verdict, ComparisonVerdict::NotBetter { margin, .. } if *margin > 0.0);
    let detail = match &verdict {
        ComparisonVerdict::NotBetter {
            margin, witness, ..
        } => format!(
            "margin {margin:.3e} with environment {}x{}",
            witness.env_a_dim(),
            witness.env_b_dim()
        ),
        other => format!("kind {}", other.kind()),
    };
    row(
        out,
        ok,
        "tomography pair: nontrivial-environment witness",
        detail,
    )?;

    // classical fixtures
    let p = blackwell_core::states::ClassicalStructure::new(vec![vec![0.3, 0.2], vec![0.1, 0.4]])
        .map_err(|e| e.to_string())?;
    let identity_ok = matches!(
        classical_better(&p, &p, config.tol).map_err(|e| e.to_string())?,
        ClassicalComparison::Feasible(_)
    );
    row(
        out,
        identity_ok,
        "classical: identity garbling",
        String::new(),
    )?;

    let uniform =
        blackwell_core::states::ClassicalStructure::new(vec![vec![0.25, 0.25], vec![0.25, 0.25]])
            .map_err(|e| e.to_string())?;
    let corr =
        blackwell_core::states::ClassicalStructure::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]])
            .map_err(|e| e.to_string())?;
    let infeasible_ok = matches!(
        classical_better(&uniform, &corr, config.tol).map_err(|e| e.to_string())?,
        ClassicalComparison::Infeasible(_)
    );
    row(
        out,
        infeasible_ok,
        "classical: correlation is not reachable from noise",
        String::new(),
    )?;

    writeln!(
        out,
        "{}",
        if all_ok {
            "all checks passed"
        } else {
            "FAILURES present"
        }
    )
    .map_err(|e| e.to_string())?;
    Ok(if all_ok { EXIT_OK } else { EXIT_ERROR })
}
