mod args;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use rayon::prelude::*;

use strfix::bench::{run_bench, Ablation, BenchCase, BenchRow};
use strfix::corruptor::synthetic::generate_corpus;
use strfix::corruptor::{corrupt, CorruptionLog, NoiseOp, NoiseSpec};
use strfix::exec::{execution_guided_repair, partition, read_tasks, unsupervised_repair, verify_repairs, ExecRepair, FormulaProgram};
use strfix::pipeline::{apply_repairs, run_column, string_columns, ColumnResult, Detection, RunConfig};
use strfix::report::{format_float, to_json, ExecRun, ExecSection, Report};
use strfix::semantics::{DictionaryOracle, IdentityOracle, SemanticOracle};
use strfix::table::{load_table, IngestOptions, Table};
use strfix::{Error, Result};

use args::{BenchArgs, Cli, Command, ConfigArgs, CorruptArgs, ExecArgs, OracleKind, TableArgs};

const EXIT_UNREPAIRED: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Detect(a) => cmd_detect(&a),
        Command::Repair { table, apply } => cmd_repair(&table, apply.as_deref()),
        Command::ExecRepair(a) => cmd_exec_repair(&a),
        Command::Corrupt(a) => cmd_corrupt(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

fn read_table(path: &Path, no_header: bool) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    load_table(
        file,
        &IngestOptions {
            has_header: !no_header,
            name: path
                .file_stem()
                .map_or_else(|| "table".into(), |s| s.to_string_lossy().into_owned()),
        },
    )
}

fn write_table(path: &Path, table: &Table, no_header: bool) -> Result<()> {
    let csv = table.to_csv_string();
    let body = if no_header {
        // Synthesized names never need quoting, so the header is one line.
        csv.split_once('\n').map_or("", |(_, rest)| rest)
    } else {
        &csv
    };
    std::fs::write(path, body)?;
    Ok(())
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn oracle(args: &ConfigArgs) -> Result<Box<dyn SemanticOracle>> {
    Ok(match args.oracle {
        OracleKind::None => Box::new(IdentityOracle),
        OracleKind::Dictionary => match &args.dictionaries {
            Some(dir) => Box::new(DictionaryOracle::from_dir(dir)?),
            None => Box::new(DictionaryOracle::bundled()),
        },
        OracleKind::Http => http_oracle()?,
    })
}

#[cfg(feature = "http-oracle")]
fn http_oracle() -> Result<Box<dyn SemanticOracle>> {
    Ok(Box::new(strfix::semantics::HttpOracle::from_env()?))
}

#[cfg(not(feature = "http-oracle"))]
fn http_oracle() -> Result<Box<dyn SemanticOracle>> {
    Err(Error::Config(
        "this build has no HTTP oracle; rebuild with `--features http-oracle`".into(),
    ))
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn selected_columns(table: &Table, names: &[String], config: &RunConfig) -> Result<Vec<usize>> {
    if names.is_empty() {
        return Ok(string_columns(table, config));
    }
    names
        .iter()
        .map(|n| table.column_index(n).ok_or_else(|| Error::Config(format!("unknown column `{n}`"))))
        .collect()
}

/// Runs the unsupervised pipeline on the selected columns, in column order.
fn run_table(a: &TableArgs) -> Result<(Table, RunConfig, Vec<ColumnResult>)> {
    let config = a.config.run_config()?;
    let table = read_table(&a.input, a.no_header)?;
    let columns = selected_columns(&table, &a.columns, &config)?;
    let oracle = oracle(&a.config)?;
    let results = pool(a.config.jobs)?.install(|| {
        columns
            .par_iter()
            .map(|&ci| run_column(&table, ci, &config, oracle.as_ref(), &Detection::Unsupervised))
            .collect()
    });
    Ok((table, config, results))
}

fn cmd_detect(a: &TableArgs) -> Result<u8> {
    let (_, config, results) = run_table(a)?;
    let report = Report::new("detect", &a.input.display().to_string(), &config, results).detections_only();
    emit(&report.to_json()?, a.out.as_deref())?;
    Ok(0)
}

fn cmd_repair(a: &TableArgs, apply: Option<&Path>) -> Result<u8> {
    let (table, config, results) = run_table(a)?;
    if let Some(path) = apply {
        write_table(path, &apply_repairs(&table, &results), a.no_header)?;
    }
    let report = Report::new("repair", &a.input.display().to_string(), &config, results);
    emit(&report.to_json()?, a.out.as_deref())?;
    Ok(if report.summary.unrepaired > 0 { EXIT_UNREPAIRED } else { 0 })
}

fn exec_run(program: &FormulaProgram, table: &Table, r: ExecRepair) -> (Table, ExecRun) {
    let (fixed, verification) = verify_repairs(program, table, &r.columns);
    (
        fixed,
        ExecRun {
            mode: r.mode,
            verification,
            columns: r.columns,
            warnings: r.warnings,
        },
    )
}

/// Both modes on one formula; returns the report and the guided table.
fn exec_report(
    formula: &str,
    table: &Table,
    input: &str,
    config: &RunConfig,
    oracle: &dyn SemanticOracle,
    guided_semantic: bool,
) -> Result<(Report, Table)> {
    let program = FormulaProgram::parse(formula)?;
    program.validate(table)?;
    let before = partition(&program, table);
    let (fixed, guided) = exec_run(
        &program,
        table,
        execution_guided_repair(&program, table, config, oracle, guided_semantic)?,
    );
    let (_, unsupervised) = exec_run(&program, table, unsupervised_repair(&program, table, config, oracle)?);
    let mut report = Report::new("exec-repair", input, config, guided.columns.clone());
    report.warnings = guided.warnings.clone();
    report.exec = Some(ExecSection {
        formula: program.to_string(),
        before: strfix::exec::Verification {
            formula_success: before.failures.is_empty(),
            cell_success_rate: before.success_rate(),
            applied: 0,
        },
        runs: vec![guided, unsupervised],
    });
    Ok((report, fixed))
}

fn exec_exit(report: &Report) -> u8 {
    let guided_ok = report
        .exec
        .as_ref()
        .is_some_and(|e| e.runs.first().is_some_and(|r| r.verification.formula_success));
    if guided_ok && report.summary.unrepaired == 0 {
        0
    } else {
        EXIT_UNREPAIRED
    }
}

fn cmd_exec_repair(a: &ExecArgs) -> Result<u8> {
    let config = a.config.run_config()?;
    let oracle = oracle(&a.config)?;
    if let Some(tasks_path) = &a.tasks {
        let tasks = read_tasks(&std::fs::read_to_string(tasks_path)?)?;
        let base = tasks_path.parent().unwrap_or(Path::new("."));
        let mut reports = Vec::new();
        let mut code = 0;
        for (i, task) in tasks.iter().enumerate() {
            let table = task.load_table(base)?;
            let (report, _) = exec_report(
                &task.formula,
                &table,
                &format!("{}#{i}", tasks_path.display()),
                &config,
                oracle.as_ref(),
                a.guided_semantic,
            )?;
            code = code.max(exec_exit(&report));
            reports.push(report);
        }
        emit(&to_json(&reports)?, a.out.as_deref())?;
        return Ok(code);
    }
    let (Some(formula), Some(input)) = (&a.formula, &a.input) else {
        return Err(Error::Config("--formula and --input are required without --tasks".into()));
    };
    let table = read_table(input, a.no_header)?;
    let (report, fixed) = exec_report(
        formula,
        &table,
        &input.display().to_string(),
        &config,
        oracle.as_ref(),
        a.guided_semantic,
    )?;
    if let Some(path) = &a.apply {
        write_table(path, &fixed, a.no_header)?;
    }
    emit(&report.to_json()?, a.out.as_deref())?;
    Ok(exec_exit(&report))
}

fn cmd_corrupt(a: &CorruptArgs) -> Result<u8> {
    let table = read_table(&a.input, a.no_header)?;
    let enabled_ops = if a.ops.is_empty() {
        NoiseOp::ALL.to_vec()
    } else {
        a.ops.iter().map(|s| NoiseOp::from_name(s)).collect::<Result<_>>()?
    };
    let spec = NoiseSpec {
        cell_probability: a.rate,
        seed: a.seed,
        enabled_ops,
        columns: a.columns.clone(),
        ..Default::default()
    };
    let (dirty, log) = corrupt(&table, &spec)?;
    write_table(&a.out, &dirty, a.no_header)?;
    emit(&to_json(&log)?, Some(&a.log))?;
    eprintln!("corrupted {} of {} text cells", log.entries.len(), log.eligible_cells);
    Ok(0)
}

fn log_path(csv: &Path) -> PathBuf {
    csv.with_extension("log.json")
}

fn read_corpus(dir: &Path, no_header: bool) -> Result<Vec<BenchCase>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::Corpus(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv") && log_path(p).exists())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Corpus(format!("{}: no NAME.csv with a NAME.log.json", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let log: CorruptionLog = serde_json::from_str(&std::fs::read_to_string(log_path(p))?)?;
            Ok(BenchCase {
                table: read_table(p, no_header)?,
                log,
            })
        })
        .collect()
}

fn synthetic_corpus(columns: usize, rows: usize, seed: u64) -> Result<Vec<BenchCase>> {
    generate_corpus(columns, rows, seed)
        .into_iter()
        .enumerate()
        .map(|(i, clean)| {
            let spec = NoiseSpec {
                seed: seed.wrapping_add(i as u64),
                ..Default::default()
            };
            let (table, log) = corrupt(&clean, &spec)?;
            Ok(BenchCase { table, log })
        })
        .collect()
}

fn bench_table(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "{:<32} {:>7} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
        "mode", "columns", "corrupted", "recall", "precision", "f1", "fire_rate"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<32} {:>7} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
            r.mode,
            r.columns,
            r.score.corrupted,
            format_float(r.score.recall),
            format_float(r.score.precision_lower_bound),
            format_float(r.score.f1),
            format_float(r.fire_rate)
        ));
    }
    out
}

fn cmd_bench(a: &BenchArgs) -> Result<u8> {
    let base = a.config.run_config()?;
    let modes: Vec<Ablation> = if a.mode == "sweep" {
        Ablation::ALL.to_vec()
    } else {
        vec![a.mode.parse()?]
    };
    let cases = match (&a.corpus, a.synthetic) {
        (_, Some(n)) => synthetic_corpus(n, a.rows, a.config.seed)?,
        (Some(dir), None) => read_corpus(dir, a.no_header)?,
        (None, None) => return Err(Error::Corpus("no corpus given".into())),
    };
    let oracle = oracle(&a.config)?;
    let rows: Vec<BenchRow> = pool(a.config.jobs)?.install(|| {
        modes
            .par_iter()
            .map(|m| run_bench(m.name(), &cases, &m.apply(&base), oracle.as_ref()))
            .collect::<Result<_>>()
    })?;
    print!("{}", bench_table(&rows));
    if let Some(out) = &a.out {
        emit(&to_json(&rows)?, Some(out))?;
    }
    Ok(0)
}
