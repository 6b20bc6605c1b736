use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lattice_reach::oracle::sample_check;
use lattice_reach::{
    builtin_property, check_property, reach, Error, FaceLattice, Network, Property, ReachConfig, ReachResult, Status,
    Strategy,
};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "lattice-reach",
    version,
    about = "Exact reachability and safety verification for ReLU networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute every linear region of the network over the property's input box.
    Reach {
        #[command(flatten)]
        run: RunArgs,
        /// Region JSON output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output-vertex CSV for plotting.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Restrict the CSV to two output dimensions.
        #[arg(long, value_parser = parse_dims)]
        plot_dims: Option<(usize, usize)>,
    },
    /// Decide the property. Exit 0 when safe, 1 when unsafe, 2 on error.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Verdict JSON output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the unsafe input polytopes here.
        #[arg(long)]
        regions_out: Option<PathBuf>,
    },
    /// Write the complete set of unsafe input polytopes.
    ExtractUnsafe {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the regions against forward passes at random inputs.
    SampleCheck {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative tolerance on the affine image.
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// Report JSON output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the network's shape.
    Info {
        #[arg(long)]
        net: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Network file (.nnet or JSON).
    #[arg(long)]
    net: PathBuf,
    /// Built-in property name (phi1..phi4, phi4b) or a property JSON file.
    #[arg(long)]
    property: String,
    #[arg(long, default_value_t = 1e-9)]
    eps: f64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, env = "LATTICE_REACH_JOBS")]
    jobs: Option<usize>,
    /// per-layer or split-at:N
    #[arg(long, default_value = "split-at:1")]
    strategy: Strategy,
    #[arg(long, default_value_t = 5_000_000)]
    region_cap: usize,
    /// Treat the property's bounds as raw units even if it is marked normalized.
    #[arg(long)]
    normalize: bool,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (i, j) = s.split_once(',').ok_or("expected i,j")?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t}: {e}"));
    Ok((parse(i)?, parse(j)?))
}

struct Loaded {
    net: Network,
    property: Property,
    raw_property: Property,
    config: ReachConfig,
}

impl RunArgs {
    fn load(&self) -> Result<Loaded, Error> {
        let net = Network::load(&self.net)?;
        let mut raw_property = if Path::new(&self.property).exists() {
            Property::load(&self.property)?
        } else {
            builtin_property(&self.property)?
        };
        if self.normalize {
            raw_property.normalized = false;
        }
        let property = raw_property.to_network_space(&net)?;
        let mut config = ReachConfig {
            eps: self.eps,
            strategy: self.strategy,
            region_cap: self.region_cap,
            ..ReachConfig::default()
        };
        if let Some(jobs) = self.jobs {
            config.workers = jobs.max(1);
        }
        Ok(Loaded {
            net,
            property,
            raw_property,
            config,
        })
    }
}

impl Loaded {
    fn reach(&self) -> Result<ReachResult, Error> {
        let input = self.property.input_lattice()?;
        let result = reach(&self.net, &input, &self.config)?;
        let s = &result.stats;
        println!(
            "regions: {}  splits: {}  degenerate: {}  time: {:.3}s",
            s.region_count,
            s.splits_performed,
            s.degenerate_splits,
            s.wall_time.as_secs_f64()
        );
        Ok(result)
    }

    /// Maps a network-space input back to the property's units.
    fn raw_input(&self, x: &[f64]) -> Result<Vec<f64>, Error> {
        if self.raw_property.normalized {
            Ok(x.to_vec())
        } else {
            self.net.denormalize_input(x)
        }
    }
}

#[derive(Serialize)]
struct VerdictJson {
    property: String,
    status: Status,
    witness: Option<Vec<f64>>,
    witness_network_units: Option<Vec<f64>>,
    witness_output: Option<Vec<f64>>,
    region_count: usize,
    unsafe_region_count: usize,
    unsafe_regions_file: Option<PathBuf>,
}

#[derive(Serialize)]
struct UnsafeRegionsJson<'a> {
    property: &'a str,
    sources: &'a [usize],
    regions: &'a [FaceLattice],
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(contents.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn write_regions(path: &Path, name: &str, sources: &[usize], regions: &[FaceLattice]) -> Result<(), Error> {
    let json = serde_json::to_string(&UnsafeRegionsJson {
        property: name,
        sources,
        regions,
    })?;
    write_file(path, &json)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Reach {
            run,
            out,
            csv,
            plot_dims,
        } => {
            let loaded = run.load()?;
            let result = loaded.reach()?;
            if let Some(path) = out {
                write_file(&path, &result.to_json()?)?;
            }
            if let Some(path) = csv {
                let mut w = BufWriter::new(File::create(path)?);
                result.write_vertex_csv(&mut w, plot_dims)?;
                w.flush()?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { run, out, regions_out } => {
            let loaded = run.load()?;
            let result = loaded.reach()?;
            let verdict = check_property(&loaded.net, &result, &loaded.property.unsafe_set, run.eps)?;
            if let Some(path) = &regions_out {
                write_regions(
                    path,
                    &loaded.property.name,
                    &verdict.unsafe_sources,
                    &verdict.unsafe_regions,
                )?;
            }
            let witness = verdict.witness.as_deref().map(|w| loaded.raw_input(w)).transpose()?;
            println!("{}: {}", loaded.property.name, verdict.status);
            if let Some(w) = &witness {
                println!("witness: {w:?}");
            }
            if let Some(path) = &out {
                let json = VerdictJson {
                    property: loaded.property.name.clone(),
                    status: verdict.status,
                    witness,
                    witness_network_units: verdict.witness.clone(),
                    witness_output: verdict.witness_output.clone(),
                    region_count: result.tuples.len(),
                    unsafe_region_count: verdict.unsafe_regions.len(),
                    unsafe_regions_file: regions_out,
                };
                write_file(path, &serde_json::to_string_pretty(&json)?)?;
            }
            Ok(match verdict.status {
                Status::Unsat => ExitCode::SUCCESS,
                Status::Sat => ExitCode::from(1),
            })
        }
        Command::ExtractUnsafe { run, out } => {
            let loaded = run.load()?;
            let result = loaded.reach()?;
            let verdict = check_property(&loaded.net, &result, &loaded.property.unsafe_set, run.eps)?;
            write_regions(
                &out,
                &loaded.property.name,
                &verdict.unsafe_sources,
                &verdict.unsafe_regions,
            )?;
            println!("unsafe polytopes: {}", verdict.unsafe_regions.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::SampleCheck {
            run,
            samples,
            seed,
            tol,
            out,
        } => {
            let loaded = run.load()?;
            let result = loaded.reach()?;
            let report = sample_check(&loaded.net, &result, samples, seed, tol)?;
            println!(
                "samples: {}  covered: {}  uncovered: {}  multi-covered: {}  max deviation: {:e} (relative {:e})",
                report.samples,
                report.covered,
                report.uncovered,
                report.multi_covered_interior,
                report.max_abs_deviation,
                report.max_rel_deviation
            );
            if let Some(path) = out {
                write_file(&path, &serde_json::to_string_pretty(&report)?)?;
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Info { net } => {
            let net = Network::load(&net)?;
            let widths: Vec<String> = net
                .layers()
                .iter()
                .map(|l| {
                    format!(
                        "{}{}",
                        l.width(),
                        if l.activation() == lattice_reach::Activation::Relu {
                            ""
                        } else {
                            " (linear)"
                        }
                    )
                })
                .collect();
            println!("inputs: {}", net.input_dim());
            println!("outputs: {}", net.output_dim());
            println!("layers: {}", widths.join(", "));
            println!("relu neurons: {}", net.relu_neurons());
            println!(
                "normalization: {}",
                if net.normalization().is_some() { "yes" } else { "no" }
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
