use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use oagfork::block_theory::{check_normal_form, is_separated, normalize, val_blocks};
use oagfork::extension_space::space_descriptor;
use oagfork::oag_model::GroupElement;
use oagfork::par::{self, Mode};
use oagfork::scene::Scene;
use oagfork::verdict::{decide_forking, free_subtuple};
use oagfork::{report, selftest, OagError};

const EXIT_INDEPENDENT: u8 = 0;
const EXIT_DEPENDENT: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "oagfork", version, about = "Decide forking, dividing and invariance of types in ordered abelian groups")]
struct Cli {
    /// Repeat for more diagnostics; -vvv dumps every eliminated linear system.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Run every engine step on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Base {
    A,
    B,
}

#[derive(Subcommand)]
enum Command {
    /// Decide all independence notions for the scene's tuple.
    Decide {
        scene: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Compute a normal-form basis of the tuple over A and B.
    Normalize { scene: PathBuf },
    /// Partition the tuple by the valuations over A or B.
    Blocks {
        scene: PathBuf,
        /// Valuation level; all three when omitted.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        level: Option<u8>,
        #[arg(long, value_enum, default_value = "a", ignore_case = true)]
        base: Base,
    },
    /// Describe the space of global invariant extensions.
    Extensions { scene: PathBuf },
    /// Validate a scene file.
    Check { scene: PathBuf },
    /// Run the shipped scenes and a seeded batch of random property checks.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long)]
        json: bool,
    },
}

enum Outcome {
    Done,
    Independent,
    Dependent,
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("reports serialize"));
}

fn decide(scene: &Scene, as_json: bool) -> oagfork::Result<Outcome> {
    let v = decide_forking(scene)?;
    if as_json {
        print_json(&report::verdict(&scene.ambient, &v));
    } else {
        let i = &v.independent;
        println!("forking-independent: {}", i.forking);
        println!("dividing-independent: {}", i.dividing);
        println!("bounded orbit: {}", i.bounded_orbit);
        println!("invariant: {}", i.invariant);
        println!("order condition: {}", v.condition1.holds);
        if let Some(w) = &v.condition1.witness {
            let amb = &scene.ambient;
            println!(
                "  point {} lies in [{}, {}], which avoids the base",
                amb.describe(&w.point),
                amb.describe(&w.interval.low),
                amb.describe(&w.interval.high)
            );
        }
        for c in &v.condition2 {
            println!("congruence condition at {}: {} (checked up to exponent {})", c.l, c.holds, c.bound);
        }
        for c in &v.invariance_extra {
            println!("invariance condition at {}: {} (checked up to exponent {})", c.l, c.holds, c.bound);
        }
        for n in &v.notes {
            println!("note: {n}");
        }
    }
    Ok(if v.independent.forking { Outcome::Independent } else { Outcome::Dependent })
}

fn run(cli: &Cli) -> oagfork::Result<Outcome> {
    match &cli.command {
        Command::Decide { scene, json } => decide(&Scene::load(scene)?, *json),
        Command::Normalize { scene } => {
            let s = Scene::load(scene)?;
            let amb = &s.ambient;
            let a = s.a_span()?;
            let b = s.b_span()?;
            let idx = free_subtuple(amb, &s.c, &a)?;
            let cs: Vec<GroupElement> = idx.iter().map(|&i| s.c[i].clone()).collect();
            let nf = normalize(amb, &cs, &a, &b)?;
            let check = check_normal_form(amb, &nf.elements, &nf.index, &a, &b)?;
            let mut out = report::normal_form(amb, &nf, &check);
            out["tuple_entries"] = json!(idx);
            print_json(&out);
            Ok(Outcome::Done)
        }
        Command::Blocks { scene, level, base } => {
            let s = Scene::load(scene)?;
            let (name, span) = match base {
                Base::A => ("A", s.a_span()?),
                Base::B => ("B", s.b_span()?),
            };
            let levels: Vec<u8> = level.map_or(vec![1, 2, 3], |l| vec![l]);
            let mut out = Vec::new();
            for l in levels {
                out.push((val_blocks(&s.ambient, &s.c, &span, l)?, is_separated(&s.ambient, &s.c, &span, l)?));
            }
            print_json(&report::blocks(name, &out));
            Ok(Outcome::Done)
        }
        Command::Extensions { scene } => {
            let s = Scene::load(scene)?;
            let (d, v) = space_descriptor(&s)?;
            print_json(&report::extensions(&s.ambient, &d, &v));
            Ok(Outcome::Done)
        }
        Command::Check { scene } => {
            let s = Scene::load(scene)?;
            println!(
                "ok: {} slots ({:?}), |A| = {}, |B| = {}, tuple length {}, {} declared primes",
                s.ambient.nslots(),
                s.ambient.kind(),
                s.a.len(),
                s.b.len(),
                s.c.len(),
                s.congruence.primes.len()
            );
            Ok(Outcome::Done)
        }
        Command::Selftest { seed, count, json } => {
            let checks = selftest::run(*seed, *count);
            if *json {
                print_json(&serde_json::to_value(&checks).expect("checks serialize"));
            } else {
                for c in &checks {
                    println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                }
            }
            Ok(if checks.iter().all(|c| c.passed) { Outcome::Done } else { Outcome::Dependent })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::new().parse_filters(level).init();
    if cli.sequential {
        par::set_mode(Mode::Sequential);
    }
    match run(&cli) {
        Ok(Outcome::Done | Outcome::Independent) => ExitCode::from(EXIT_INDEPENDENT),
        Ok(Outcome::Dependent) => ExitCode::from(EXIT_DEPENDENT),
        Err(e @ OagError::Config(_)) => {
            eprintln!("oagfork: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("oagfork: {e}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
