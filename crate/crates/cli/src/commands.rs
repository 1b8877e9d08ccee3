use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use texttemp::experiments::estimate_row;
use texttemp::storage::{load_logit_dump, load_results, save_results, write_results, ExperimentSpec};
use texttemp::{
    corpus_stats, cross_grid, estimate_temperature, run_sweep, CrossGridResult, EstimateStatus, ResultTable, Schema,
    SolverConfig, SweepConfig, SweepResult, SyntheticModel, SyntheticModelSpec, TemperatureEstimate, TemperatureGrid,
};

use crate::{CorpusArgs, CrossgridArgs, Emit, EstimateArgs, OutputFormat, ReportArgs, SolverArgs, SweepArgs};

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig> {
        let config = SolverConfig {
            beta_lo: self.bracket_lo,
            beta_hi: self.bracket_hi,
            beta_init: self.beta_init,
            tol_beta_rel: self.tol,
            max_iter: self.max_iter,
            ..SolverConfig::default()
        };
        config.validate().context("solver options")?;
        Ok(config)
    }
}

fn warn_if_degenerate(source: &str, e: &TemperatureEstimate) {
    if e.status == EstimateStatus::Degenerate {
        eprintln!("warning: {source}: every step has a uniform distribution; the temperature is unidentifiable");
    }
}

fn write_table(path: &Path, table: &ResultTable) -> Result<()> {
    save_results(path, table).with_context(|| format!("writing {}", path.display()))
}

pub fn estimate(args: EstimateArgs) -> Result<()> {
    let config = args.solver.config()?;
    let (logits, tokens) = load_logit_dump(&args.logits)?;
    let source = args.logits.display().to_string();
    let e = estimate_temperature(&logits, &tokens, &config).with_context(|| source.clone())?;
    warn_if_degenerate(&source, &e);
    match args.format {
        OutputFormat::Text => {
            println!("t_hat           {}", e.t_hat);
            println!("beta_hat        {}", e.beta_hat);
            println!("status          {}", e.status);
            println!("log_likelihood  {}", e.log_likelihood_at_root);
            println!("steps           {}", logits.n_steps());
            println!("iterations      {}", e.iterations);
        }
        OutputFormat::Records => {
            let mut table = ResultTable::new(Schema::Estimate);
            table.push(estimate_row(&source, logits.n_steps(), &e))?;
            write_results(&table, io::stdout().lock())?;
        }
    }
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let base = SyntheticModelSpec { vocab: args.vocab, order: args.order, logit_scale: args.logit_scale, seed: 0 };
    let generator = SyntheticModel::build(SyntheticModelSpec { seed: args.gen_seed, ..base })
        .context("generator model")?
        .with_id(format!("gen-seed{}", args.gen_seed));
    let est_spec = SyntheticModelSpec {
        seed: args.est_seed,
        logit_scale: args.est_logit_scale.unwrap_or(args.logit_scale),
        ..base
    };
    let estimator =
        SyntheticModel::build(est_spec).context("estimator model")?.with_id(format!("est-seed{}", args.est_seed));
    let g = &args.grid;
    let config = SweepConfig {
        grid: TemperatureGrid::new(g.tmin, g.tmax, g.tstep)?,
        texts_per_t: g.texts,
        n_tokens: g.tokens,
        seed: args.seed,
        solver: SolverConfig::default(),
        jobs: g.jobs,
    };
    let result = run_sweep(&generator, &estimator, &config)?;
    write_table(&args.out, &result.to_table())?;

    let m = result.metrics()?;
    println!("rows            {}", m.n_rows);
    println!("converged       {}", m.n_converged);
    println!("flagged         {}", m.n_flagged);
    println!("mae_all         {}", m.mae_all);
    println!("mae_converged   {}", show(m.mae_converged));
    println!("r2              {}", show(m.r2));
    println!("pearson         {}", show(m.pearson));
    Ok(())
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), |x| x.to_string())
}

pub fn crossgrid(args: CrossgridArgs) -> Result<()> {
    let spec = ExperimentSpec::load(&args.models)?;
    let Some(seed) = args.seed.or(spec.seed) else {
        bail!("no text seed: pass --seed or set `seed` in {}", args.models.display());
    };
    let base = spec.grid.unwrap_or_default();
    let grid = TemperatureGrid::new(
        args.tmin.unwrap_or(base.t_min),
        args.tmax.unwrap_or(base.t_max),
        args.tstep.unwrap_or(base.t_step),
    )?;
    let config = SweepConfig {
        grid,
        texts_per_t: args.texts.or(spec.texts_per_t).unwrap_or(10),
        n_tokens: args.tokens.or(spec.n_tokens).unwrap_or(200),
        seed,
        solver: spec.solver.unwrap_or_default(),
        jobs: args.jobs,
    };
    let mut models = Vec::with_capacity(spec.models.len());
    for entry in &spec.models {
        let model = SyntheticModel::build(entry.spec()).with_context(|| format!("model {:?}", entry.id))?;
        models.push(model.with_id(entry.id.clone()));
    }

    let result = cross_grid(&models, &config)?;
    write_table(&args.out, &result.to_table())?;
    if let Some(path) = &args.per_t_out {
        write_table(path, &result.per_temperature_table())?;
    }
    print_mae_matrix(&result);

    if args.assert_diagonal {
        let bad = result.diagonal_violations();
        if !bad.is_empty() {
            let names: Vec<&str> = bad.iter().map(|&i| result.model_ids[i].as_str()).collect();
            bail!("diagonal dominance fails for generator(s) {}", names.join(", "));
        }
    }
    Ok(())
}

fn print_mae_matrix(result: &CrossGridResult) {
    println!("mae_all (rows: generator, columns: estimator)");
    let width = result.model_ids.iter().map(String::len).max().unwrap_or(0).max(8);
    print!("{:width$}", "");
    for id in &result.model_ids {
        print!("  {id:>width$}");
    }
    println!();
    for (id, row) in result.model_ids.iter().zip(result.mae_matrix()) {
        print!("{id:width$}");
        for v in row {
            print!("  {v:>width$.4}");
        }
        println!();
    }
}

fn tlog_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.with_context(|| format!("reading directory {}", dir.display()))?.path();
        if path.is_file() && path.extension().is_some_and(|ext| ext == "tlog") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn corpus(args: CorpusArgs) -> Result<()> {
    let config = args.solver.config()?;
    let files = tlog_files(&args.dir)?;
    if files.is_empty() {
        bail!("{}: no .tlog files", args.dir.display());
    }

    let mut table = ResultTable::new(Schema::Estimate);
    let mut estimates = Vec::with_capacity(files.len());
    for path in &files {
        let source = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        let loaded = load_logit_dump(path).map_err(anyhow::Error::from).and_then(|(logits, tokens)| {
            let e = estimate_temperature(&logits, &tokens, &config).with_context(|| path.display().to_string())?;
            Ok((logits.n_steps(), e))
        });
        match loaded {
            Ok((n_steps, e)) => {
                warn_if_degenerate(&source, &e);
                table.push(estimate_row(&source, n_steps, &e))?;
                estimates.push(e);
            }
            Err(err) if !args.strict => eprintln!("warning: skipping {}", crate::render_chain(&err)),
            Err(err) => return Err(err),
        }
    }
    write_table(&args.out, &table)?;

    let id = args.corpus_id.clone().unwrap_or_else(|| {
        args.dir.file_name().map_or_else(|| args.dir.display().to_string(), |n| n.to_string_lossy().into_owned())
    });
    let stats = corpus_stats(&estimates, &id)?;
    let summary = stats.to_table();
    if let Some(path) = &args.summary_out {
        write_table(path, &summary)?;
    }
    write_results(&summary, io::stdout().lock())?;
    Ok(())
}

pub fn report(args: ReportArgs) -> Result<()> {
    let table = load_results(&args.input)?;
    let (wanted, out) = match args.emit {
        Emit::SweepPlot => (Schema::Sweep, SweepResult::from_table(&table).map(|s| s.plot_table())),
        Emit::Heatmap => (Schema::CrossGrid, CrossGridResult::from_table(&table).map(|c| c.heatmap_table())),
    };
    if table.schema() != wanted {
        bail!("{}: expected a {wanted} table, found {}", args.input.display(), table.schema());
    }
    let out = out.with_context(|| args.input.display().to_string())?;
    match &args.out {
        Some(path) => write_table(path, &out),
        None => {
            let mut stdout = io::stdout().lock();
            write_results(&out, &mut stdout)?;
            stdout.flush()?;
            Ok(())
        }
    }
}
