//! Interactive commissioner console. Prompts, echoes and status lines
//! reproduce the operator workflow byte for byte so a scripted session
//! can be replayed and diffed against a pinned transcript.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use patrol_core::anonymizer::AnonParams;
use patrol_core::model::{Registry, Rfid, Zone};

use crate::config::{Config, DEFAULT_ANON_OUT};
use crate::ops::{self, Failure};

pub const MENU: &str =
    "Choose: 1.Process officers' data      2.obfuscate data to criminals  3.Exit";

pub struct Session<'a> {
    config: &'a Config,
    registry: Registry,
    repo: patrol_core::patterns::Repository,
}

/// Runs the console loop on stdin/stdout; the exit code is 0 on a clean
/// exit (menu choice 3 or end of input).
pub fn run(config: &Config) -> Result<i32, Failure> {
    let registry_path = config.registry.as_deref().ok_or_else(|| {
        Failure::Usage("interactive session needs a registry (--registry or config)".into())
    })?;
    let registry = ops::load_registry(registry_path)?;
    let repo = ops::open_repository(config.repo.as_deref())?;
    let mut session = Session {
        config,
        registry,
        repo,
    };
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    let mut input = || lines.next().and_then(|r| r.ok());
    session.main_loop(&mut input);
    Ok(0)
}

impl<'a> Session<'a> {
    fn main_loop(&mut self, input: &mut dyn FnMut() -> Option<String>) {
        if self.detect_step(input).is_none() {
            return;
        }
        loop {
            println!("{MENU}");
            let Some(choice) = prompt("Choice:", input) else {
                return;
            };
            match choice.trim() {
                "1" => {
                    if self.process_step(input).is_none() {
                        return;
                    }
                }
                "2" => {
                    if self.obfuscate_step(input).is_none() {
                        return;
                    }
                }
                "3" => return,
                _ => {}
            }
        }
    }

    fn detect_step(&mut self, input: &mut dyn FnMut() -> Option<String>) -> Option<()> {
        println!("Detecting RFID:");
        loop {
            let line = prompt("Enter the requesting ids:", input)?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.is_empty() {
                continue;
            }
            let mut ids = Vec::new();
            let mut bad = None;
            for tok in &tokens {
                match tok.parse::<u64>() {
                    Ok(id) => ids.push(Rfid(id)),
                    Err(_) => {
                        bad = Some(*tok);
                        break;
                    }
                }
            }
            if let Some(tok) = bad {
                println!("Invalid id `{tok}`: enter numeric RFIDs.");
                continue;
            }
            let (officers, criminals) = ops::detect(&ids, &self.registry);
            let (officers_line, criminals_line) = ops::detection_lines(&officers, &criminals);
            println!("{officers_line}");
            println!("{criminals_line}");
            return Some(());
        }
    }

    fn process_step(&mut self, input: &mut dyn FnMut() -> Option<String>) -> Option<()> {
        let line = prompt("Enter the zone number:", input)?;
        let Ok(zone_id) = line.trim().parse::<u32>() else {
            println!("Invalid zone number.");
            return Some(());
        };
        let Some(officers) = self.config.zones.get(&zone_id) else {
            println!("No officers assigned to zone {zone_id}.");
            return Some(());
        };
        println!();
        let listed: Vec<String> = officers.iter().map(|r| r.0.to_string()).collect();
        println!("Police officers assigned to this zone are: {}", listed.join(" "));
        let mut files = Vec::new();
        for _ in officers {
            let name = prompt("Enter filename: ", input)?;
            files.push(PathBuf::from(name.trim()));
        }
        println!();
        let zone = Zone {
            zone_id,
            officer_ids: officers.iter().copied().collect(),
        };
        match ops::process_files(
            &zone,
            &files,
            &self.registry,
            &mut self.repo,
            self.config.eps,
            self.config.tau,
            self.config.guard,
        ) {
            Ok(outcome) => {
                println!("Data is aggregated.");
                println!();
                println!("Using a context aware pattern, criminals details are recorded.");
                if outcome.skipped_duplicate {
                    println!("duplicate batch, skipped");
                } else {
                    println!("Records stored: {}", outcome.stored);
                }
                println!("Press a key.");
                input()?;
            }
            Err(failure) => {
                println!("error: {}", failure.message());
            }
        }
        Some(())
    }

    fn obfuscate_step(&mut self, input: &mut dyn FnMut() -> Option<String>) -> Option<()> {
        println!();
        println!("OBFUSCATING DATA - to achieve LOCATION PRIVACY");
        println!("@ POLICE COMMISSIONER End:");
        let Some(data) = self.config.data.clone() else {
            println!("load data first: no dataset configured.");
            return Some(());
        };
        let (k, delta) = loop {
            let line = prompt("Enter the anonymity level and the uncertainty: ", input)?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let parsed = match tokens.as_slice() {
                [k, d] => k.parse::<usize>().ok().zip(d.parse::<f64>().ok()),
                _ => None,
            };
            match parsed {
                Some((k, d)) if k >= 2 && d > 0.0 && d.is_finite() => break (k, d),
                _ => {
                    println!("Enter two values: k (integer >= 2) and delta (> 0).");
                }
            }
        };
        let params = AnonParams {
            k,
            delta,
            pi: self.config.pi,
            max_radius: self.config.max_radius(),
            delta_max: self.config.delta_max,
            trash_max: self.config.trash_max,
        };
        println!("Parameters:");
        println!(
            "K={k}, delta={delta}, pi={}, delta_max={:.3}, trash_max={:.1}%",
            params.pi,
            params.delta_max,
            params.trash_max * 100.0
        );
        println!("Loading data...");
        let out = self
            .config
            .anon_out
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_ANON_OUT));
        match ops::obfuscate_file(&data, &out, &params, self.config.seed) {
            Ok(result) => {
                println!("Loading objects... Done.");
                let stats = result.stats;
                println!(
                    "-> Trajectories: {}, Points: {}, Diameter: {:.3}",
                    stats.trajectories_in, stats.points_in, stats.diameter
                );
                println!(
                    "-> Removed Trajectories: {}, Removed Points: {}",
                    stats.removed_trajectories, stats.removed_points
                );
                println!("Creating equivalence classes...Done.");
                println!(
                    "Processing equivalence classes: Done! [ {} equiv. classes ]",
                    stats.class_count
                );
            }
            Err(failure) => {
                println!("error: {}", failure.message());
            }
        }
        Some(())
    }
}

/// Prints the prompt without a newline, reads one input line and echoes
/// it, mirroring what a terminal shows an operator typing.
fn prompt(text: &str, input: &mut dyn FnMut() -> Option<String>) -> Option<String> {
    print!("{text}");
    std::io::stdout().flush().ok();
    let line = input()?;
    println!("{line}");
    Some(line)
}
