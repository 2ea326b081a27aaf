use std::process::ExitCode;

use clap::{Parser, Subcommand};

use geoval::dre::LsifConfig;
use geoval::experiment::{self, SweepSpec, TabularSpec};
use geoval::ingest::ColumnSchema;
use geoval::shiftfns;
use geoval::simulate::{LabelingFunction, ShiftSpec};

#[derive(Parser)]
#[command(version, about = "Validation-error estimators for spatial learning under covariate shift")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the (delta, tau, r) Gaussian sweep and write one CSV row per cell.
    Sweep {
        #[arg(long, default_value = "0:1:5")]
        deltas: String,
        #[arg(long, default_value = "0.2:1:5")]
        taus: String,
        #[arg(long, default_value = "0,10,20")]
        ranges: String,
        #[arg(long, default_value = "100x100")]
        grid: String,
        #[arg(long, default_value = "knn,tree")]
        models: String,
        #[arg(long, default_value_t = 1)]
        p: u32,
        #[arg(long, default_value_t = 4.0)]
        w: f64,
        #[arg(long, default_value_t = 100)]
        mc: usize,
        #[arg(long, default_value_t = 20.0)]
        block_side: f64,
        #[arg(long, default_value_t = 2.0)]
        lsif_sigma: f64,
        #[arg(long, default_value_t = 10)]
        lsif_b: usize,
        #[arg(long, default_value_t = 1e-3)]
        lsif_lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "results.csv")]
        out: String,
    },
    /// Rank models on a two-domain CSV table.
    Tabular {
        #[arg(long)]
        csv: String,
        #[arg(long, default_value = "X,Y,Z")]
        coords: String,
        #[arg(long, default_value = "GR,SP,DENS,DTC,NEUT")]
        features: String,
        #[arg(long, default_value = "FORMATION")]
        label: String,
        #[arg(long, default_value = "ONSHORE")]
        domain_col: String,
        #[arg(long, default_value = "shifted")]
        mode: String,
        #[arg(long, default_value = "URENUI,MANGANUI")]
        classes: String,
        #[arg(long, default_value = "10000,10000,500")]
        block_sides: String,
        /// Number of random CV folds, or `auto` for the source block count.
        #[arg(long, default_value = "auto")]
        k: String,
        #[arg(long, default_value = "dummy,knn,tree,logistic,gaussian_nb")]
        models: String,
        #[arg(long, default_value_t = 2.0)]
        lsif_sigma: f64,
        #[arg(long, default_value_t = 10)]
        lsif_b: usize,
        #[arg(long, default_value_t = 1e-3)]
        lsif_lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "run")]
        out_prefix: String,
    },
    /// Print config, kl, jaccard and novelty for one shift as a CSV line.
    Shiftfn {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        tau: f64,
    },
}

fn split(s: &str) -> Vec<String> {
    s.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect()
}

fn run(cli: Cli) -> geoval::Result<()> {
    match cli.command {
        Command::Sweep {
            deltas,
            taus,
            ranges,
            grid,
            models,
            p,
            w,
            mc,
            block_side,
            lsif_sigma,
            lsif_b,
            lsif_lambda,
            l,
            seed,
            out,
        } => {
            let spec = SweepSpec {
                deltas: experiment::parse_linspace(&deltas)?,
                taus: experiment::parse_linspace(&taus)?,
                ranges: experiment::parse_list(&ranges)?,
                grid_dims: experiment::parse_dims(&grid)?,
                labeling: LabelingFunction::new(p, w)?,
                models: experiment::parse_models(&models)?,
                n_mc: mc,
                block_side,
                lsif: LsifConfig {
                    b: lsif_b,
                    sigma: lsif_sigma,
                    lambda: lsif_lambda,
                    ..LsifConfig::default()
                },
                l,
                seed,
            };
            let rows = experiment::run_sweep(&spec)?;
            experiment::write_sweep(&rows, &out)?;
            let unstable = rows.iter().filter(|r| !r.drv_ok).count();
            eprintln!("wrote {} rows to {out} ({unstable} unstable DRV cells)", rows.len());
        }
        Command::Tabular {
            csv,
            coords,
            features,
            label,
            domain_col,
            mode,
            classes,
            block_sides,
            k,
            models,
            lsif_sigma,
            lsif_b,
            lsif_lambda,
            l,
            seed,
            out_prefix,
        } => {
            let schema = ColumnSchema::new(&split(&coords), &split(&features), &label, Some(&domain_col))?;
            let classes = split(&classes);
            let [a, b] = classes.as_slice() else {
                return Err(geoval::Error::InvalidInput("--classes takes exactly two labels".into()));
            };
            let mut spec = TabularSpec::new(schema, (a, b));
            spec.mode = mode.parse()?;
            spec.block_sides = experiment::parse_list(&block_sides)?;
            spec.k = match k.as_str() {
                "auto" => None,
                v => Some(v.parse().map_err(|_| geoval::Error::InvalidInput(format!("bad --k `{v}`")))?),
            };
            spec.models = experiment::parse_models(&models)?;
            spec.lsif = LsifConfig {
                b: lsif_b,
                sigma: lsif_sigma,
                lambda: lsif_lambda,
                ..LsifConfig::default()
            };
            spec.l = l;
            spec.seed = seed;
            let report = experiment::run_tabular(&csv, &spec)?;
            let (est, rank) = report.write(&out_prefix)?;
            eprintln!(
                "{} source / {} target rows, {} folds; wrote {} and {}",
                report.n_source,
                report.n_target,
                report.n_folds,
                est.display(),
                rank.display()
            );
        }
        Command::Shiftfn { delta, tau } => {
            let s = ShiftSpec::new(delta, tau)?;
            println!(
                "{},{},{},{}",
                shiftfns::classify(s),
                shiftfns::kl(s),
                shiftfns::jaccard(s),
                shiftfns::novelty(s)
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
