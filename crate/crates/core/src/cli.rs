//! Command-line surface. Exit codes: 0 success, 1 verification or axiom
//! failure, 2 usage or parse errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::axioms::{check_axioms, refine_labels};
use crate::doc::{parse_history, parse_rule, parse_rule_unchecked, render_rule};
use crate::dot::{export_dot, DotOptions};
use crate::gallery;
use crate::history::build_history;
use crate::infer::infer_rule;
use crate::realize::verify_realization;
use crate::rule::{validate_rule, CombRule};
use crate::stats::stats;

#[derive(Parser)]
#[command(
    name = "subdiv",
    about = "Build, validate, and analyze history graphs of subdivision rules",
    version
)]
struct Cli {
    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a rule document against the static validity conditions.
    Validate { rulefile: String },
    /// Expand a rule into its history graph and report level sizes.
    Expand {
        rulefile: String,
        #[arg(long)]
        depth: usize,
        /// Write the history graph as DOT to this file.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Print growth statistics.
        #[arg(long)]
        stats: bool,
    },
    /// Check the subdivision-rule axioms on a history graph document, or
    /// on the expansion of a rule when --depth is given.
    CheckAxioms {
        file: String,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Infer a rule from a history graph document.
    Infer {
        graphfile: String,
        /// Refine underdetermined labels before inferring.
        #[arg(long)]
        refine: bool,
    },
    /// Build the symbolic 3-dimensional pair for a rule and verify that
    /// its history graph matches direct expansion.
    Realize3d {
        rulefile: String,
        #[arg(long)]
        depth: usize,
    },
    /// Run a bundled 2-dimensional rule on a bundled surface.
    Planar {
        surface: String,
        rule: String,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long)]
        stats: bool,
    },
    /// List the bundled rules and surfaces.
    Gallery,
}

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn fail(msg: impl AsRef<str>) -> ExitCode {
    eprintln!("{}", msg.as_ref());
    ExitCode::from(EXIT_FAIL)
}

fn usage_error(msg: impl AsRef<str>) -> ExitCode {
    eprintln!("{}", msg.as_ref());
    ExitCode::from(EXIT_USAGE)
}

/// Loads a rule: a bundled gallery name or a rule document path.
fn load_rule(arg: &str) -> Result<CombRule, ExitCode> {
    if let Some(rule) = gallery::comb_rule(arg) {
        return Ok(rule);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| usage_error(format!("cannot read {arg}: {e}")))?;
    parse_rule(&text).map_err(|e| usage_error(format!("{arg}: {e}")))
}

fn resolve_out(out_dir: &Option<PathBuf>, path: &Path) -> PathBuf {
    match out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_owned(),
    }
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { rulefile } => {
            // Parse without validating so the report itself is the output.
            let text = match (gallery::comb_rule(&rulefile), std::fs::read_to_string(&rulefile)) {
                (Some(rule), _) => {
                    let report = validate_rule(&rule);
                    println!("{report}");
                    return ExitCode::SUCCESS;
                }
                (None, Ok(text)) => text,
                (None, Err(e)) => return usage_error(format!("cannot read {rulefile}: {e}")),
            };
            match parse_rule_unchecked(&text) {
                Ok(rule) => {
                    let report = validate_rule(&rule);
                    println!("{report}");
                    if report.is_pass() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_FAIL)
                    }
                }
                Err(e) => usage_error(format!("{rulefile}: {e}")),
            }
        }
        Command::Expand {
            rulefile,
            depth,
            dot,
            stats: want_stats,
        } => {
            let rule = match load_rule(&rulefile) {
                Ok(r) => r,
                Err(code) => return code,
            };
            let h = match build_history(&rule, depth) {
                Ok(h) => h,
                Err(e) => return fail(format!("expansion failed: {e}")),
            };
            let sizes: Vec<String> = h.level_sizes().iter().map(|s| s.to_string()).collect();
            println!("levels: [{}]", sizes.join(", "));
            if want_stats {
                print!("{}", stats(&h));
            }
            if let Some(path) = dot {
                let path = resolve_out(&cli.out_dir, &path);
                let text = export_dot(&h, &DotOptions::default());
                if let Err(e) = std::fs::write(&path, text) {
                    return fail(format!("cannot write {}: {e}", path.display()));
                }
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Command::CheckAxioms { file, depth } => {
            let h = match depth {
                Some(depth) => {
                    let rule = match load_rule(&file) {
                        Ok(r) => r,
                        Err(code) => return code,
                    };
                    match build_history(&rule, depth) {
                        Ok(h) => h,
                        Err(e) => return fail(format!("expansion failed: {e}")),
                    }
                }
                None => {
                    let text = match std::fs::read_to_string(&file) {
                        Ok(t) => t,
                        Err(e) => return usage_error(format!("cannot read {file}: {e}")),
                    };
                    match parse_history(&text) {
                        Ok(h) => h,
                        Err(e) => return usage_error(format!("{file}: {e}")),
                    }
                }
            };
            let report = check_axioms(&h);
            if report.is_pass() {
                println!("pass");
                ExitCode::SUCCESS
            } else {
                eprintln!("{report}");
                ExitCode::from(EXIT_FAIL)
            }
        }
        Command::Infer { graphfile, refine } => {
            let text = match std::fs::read_to_string(&graphfile) {
                Ok(t) => t,
                Err(e) => return usage_error(format!("cannot read {graphfile}: {e}")),
            };
            let mut h = match parse_history(&text) {
                Ok(h) => h,
                Err(e) => return usage_error(format!("{graphfile}: {e}")),
            };
            if refine {
                h = match refine_labels(&h) {
                    Ok(h) => h,
                    Err(e) => return fail(format!("refinement failed: {e}")),
                };
            }
            match infer_rule(&h) {
                Ok(rule) => {
                    print!("{}", render_rule(&rule));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(format!("inference failed: {e}")),
            }
        }
        Command::Realize3d { rulefile, depth } => {
            let rule = match load_rule(&rulefile) {
                Ok(r) => r,
                Err(code) => return code,
            };
            match verify_realization(&rule, depth) {
                Ok(report) => {
                    print!("{report}");
                    if report.pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_FAIL)
                    }
                }
                Err(e) => fail(format!("realization failed: {e}")),
            }
        }
        Command::Planar {
            surface,
            rule,
            depth,
            dot,
            stats: want_stats,
        } => {
            let Some(x) = gallery::surface(&surface) else {
                return usage_error(format!(
                    "unknown surface {surface}; bundled surfaces: {}",
                    gallery::SURFACE_NAMES.join(", ")
                ));
            };
            let Some(rule2d) = gallery::rule2d(&rule) else {
                return usage_error(format!(
                    "unknown 2D rule {rule}; bundled rules: {}",
                    gallery::RULE2D_NAMES.join(", ")
                ));
            };
            let h = match crate::planar::history_graph_2d(&x, &rule2d, depth) {
                Ok(h) => h,
                Err(e) => return fail(format!("subdivision failed: {e}")),
            };
            let sizes: Vec<String> = h.level_sizes().iter().map(|s| s.to_string()).collect();
            println!("levels: [{}]", sizes.join(", "));
            if want_stats {
                print!("{}", stats(&h));
            }
            if let Some(path) = dot {
                let path = resolve_out(&cli.out_dir, &path);
                let text = export_dot(&h, &DotOptions::default());
                if let Err(e) = std::fs::write(&path, text) {
                    return fail(format!("cannot write {}: {e}", path.display()));
                }
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Command::Gallery => {
            println!("combinatorial rules:");
            for name in gallery::COMB_RULE_NAMES {
                println!("  {name}");
            }
            println!("2D rules:");
            for name in gallery::RULE2D_NAMES {
                println!("  {name}");
            }
            println!("surfaces:");
            for name in gallery::SURFACE_NAMES {
                println!("  {name}");
            }
            ExitCode::SUCCESS
        }
    }
}
