//! The seven verbs. Each resolves its configuration (file merged with
//! flags, typo-checked against the verb's vocabulary), runs the core
//! routine, writes outputs into a fresh run directory, and prints the
//! sealed manifest path as the final stdout line.

use std::path::Path;

use rand_chacha::rand_core::RngCore;
use serde::Serialize;

use wulff_core::gibbs::{Ensemble, GibbsConfig};
use wulff_core::isoperimetry::{analyze_animal, for_each_animal};
use wulff_core::oracle::{
    continuous_oracle, discrete_oracle, exit_tail_bound, exit_time_tail, OracleResult,
    MAX_TRUNCATION_DEPTH,
};
use wulff_core::sampler::{run_chain_capturing, ChainState, InitKind, TraceRow};
use wulff_core::scaling::{fit_exponent, FitObservable, RunRecord};
use wulff_core::tilted::{
    build_profile, canonical_path_bound, spectral_gap, TiltedGenerator, DEFAULT_SMOOTHING_FLOOR,
};
use wulff_core::{snapshot_string, SeedSplitter};

use crate::config::{
    echo_gibbs, gibbs_from, mix_from, parse_variant, schedule_from, variant_label, ConfigMap,
    DEFAULT_SEED,
};
use crate::rundir::RunDir;
use crate::{
    usage, CliError, CliResult, ExitBoundArgs, FitArgs, IsoArgs, OracleArgs, SampleArgs,
    SweepArgs, TiltedArgs,
};

/// Widest interval the exit-time tabulation will compute row by row.
const MAX_EXIT_WIDTH: usize = 2000;

/// Numerical slack when comparing an exact survival probability against
/// its closed-form upper bound.
const EXIT_BOUND_SLACK: f64 = 1e-9;

fn to_pretty<T: Serialize>(value: &T) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Core(wulff_core::Error::numerical(e.to_string())))?;
    text.push('\n');
    Ok(text)
}

fn announce(path: &Path) {
    println!("manifest: {}", path.display());
}

// ---------------------------------------------------------------- sample

const SAMPLE_KEYS: &[&str] = &[
    "dim",
    "beta",
    "variant",
    "steps",
    "horizon_time",
    "seed",
    "burn_in_sweeps",
    "samples",
    "thinning_sweeps",
    "move_mix",
];

pub fn sample(args: &SampleArgs, mut map: ConfigMap, out_dir: Option<&Path>) -> CliResult<()> {
    args.model.overlay(&mut map);
    args.schedule.overlay(&mut map);
    map.restrict(SAMPLE_KEYS)?;

    let config = gibbs_from(&map)?;
    let schedule = schedule_from(&map)?;
    mix_from(&map)?;
    let seed = map.u64_or("seed", DEFAULT_SEED)?;

    let mut run = RunDir::create(out_dir, "sample")?;
    match config.dim {
        1 => sample_dim::<1>(&config, &map, seed, args.snapshot, &mut run)?,
        2 => sample_dim::<2>(&config, &map, seed, args.snapshot, &mut run)?,
        3 => sample_dim::<3>(&config, &map, seed, args.snapshot, &mut run)?,
        4 => sample_dim::<4>(&config, &map, seed, args.snapshot, &mut run)?,
        other => return Err(usage(format!("dim {other} unsupported; this build handles 1..=4"))),
    }

    let mut echo = ConfigMap::new();
    echo_gibbs(&mut echo, &config);
    echo.set("seed", seed);
    echo.set("burn_in_sweeps", schedule.burn_in);
    echo.set("samples", schedule.samples);
    echo.set("thinning_sweeps", schedule.thinning);
    echo.set("move_mix", map.str_or("move_mix", "default"));
    let manifest = run.finalize("sample", Some(seed), &echo)?;
    announce(&manifest);
    Ok(())
}

fn sample_dim<const D: usize>(
    config: &GibbsConfig,
    map: &ConfigMap,
    seed: u64,
    snapshot: bool,
    run: &mut RunDir,
) -> CliResult<()> {
    let schedule = schedule_from(map)?;
    let mix = mix_from(map)?;
    let mut rng = SeedSplitter::new(seed).stream(0);
    let state = ChainState::<D>::init(config, InitKind::Zigzag, &mut rng)?;
    let (trace, final_state) = run_chain_capturing(state, &mix, &schedule, &mut rng)?;

    let mut csv = TraceRow::csv_header(D);
    csv.push('\n');
    for row in &trace.rows {
        csv.push_str(&row.csv_line());
        csv.push('\n');
    }
    run.write("trace.csv", &csv)?;

    let summary = serde_json::json!({
        "config": config,
        "seed": seed,
        "jump_count": trace.jump_count,
        "summaries": &trace.summaries,
        "move_stats": &trace.move_stats,
    });
    run.write("summary.json", &to_pretty(&summary)?)?;

    if snapshot {
        run.write("snapshot.sites", &snapshot_string(&final_state.positions()))?;
    }

    println!("jump_count = {}", trace.jump_count);
    for key in ["H", "Htilde", "diam", "volume"] {
        if let Some(s) = trace.summaries.get(key) {
            println!("{key}: mean = {}, se = {}, ess = {}", s.mean, s.se, s.ess);
        }
    }
    Ok(())
}

// ----------------------------------------------------------------- sweep

const SWEEP_KEYS: &[&str] = &[
    "dim",
    "beta",
    "variant",
    "steps",
    "horizon_time",
    "seed",
    "burn_in_sweeps",
    "samples",
    "thinning_sweeps",
    "move_mix",
    "beta_list",
    "steps_list",
    "horizon_time_list",
];

pub fn sweep(args: &SweepArgs, mut map: ConfigMap, out_dir: Option<&Path>) -> CliResult<()> {
    args.model.overlay(&mut map);
    args.schedule.overlay(&mut map);
    map.overlay("beta_list", args.beta_list.clone());
    map.overlay("steps_list", args.steps_list.clone());
    map.overlay("horizon_time_list", args.horizon_list.clone());
    map.restrict(SWEEP_KEYS)?;

    let dim = map.usize_or("dim", 2)?;
    let variant = parse_variant(map.str_or("variant", "boundary"))?;
    let schedule = schedule_from(&map)?;
    let mix = mix_from(&map)?;
    let master_seed = map.u64_or("seed", DEFAULT_SEED)?;

    let betas: Vec<f64> = if map.contains("beta_list") {
        map.f64_list("beta_list")?
    } else {
        vec![map.f64_or("beta", 1.0)?]
    };
    if betas.is_empty() {
        return Err(usage("beta_list must name at least one penalty strength"));
    }

    let steps_list = if map.contains("steps_list") {
        map.u64_list("steps_list")?
    } else if map.contains("steps") {
        vec![map.u64_or("steps", 0)?]
    } else {
        Vec::new()
    };
    let horizon_list = if map.contains("horizon_time_list") {
        map.f64_list("horizon_time_list")?
    } else if map.contains("horizon_time") {
        vec![map.f64_or("horizon_time", 0.0)?]
    } else {
        Vec::new()
    };
    let ensembles: Vec<Ensemble> = match (steps_list.is_empty(), horizon_list.is_empty()) {
        (false, false) => {
            return Err(usage(
                "give either a steps grid or a horizon_time grid, not both",
            ))
        }
        (true, true) => {
            return Err(usage(
                "a time grid is required: set steps_list or horizon_time_list",
            ))
        }
        (false, true) => steps_list
            .iter()
            .map(|&steps| Ensemble::DiscreteSkeleton { steps })
            .collect(),
        (true, false) => horizon_list
            .iter()
            .map(|&horizon| Ensemble::ContinuousTime { horizon })
            .collect(),
    };

    let mut grid = Vec::with_capacity(ensembles.len() * betas.len());
    for &ensemble in &ensembles {
        for &beta in &betas {
            grid.push(GibbsConfig {
                dim,
                variant,
                ensemble,
                beta,
            });
        }
    }
    let splitter = SeedSplitter::new(master_seed);
    let seeds: Vec<u64> = (0..grid.len())
        .map(|i| splitter.stream(i as u64).next_u64())
        .collect();

    let mut run = RunDir::create(out_dir, "sweep")?;
    let report = wulff_core::scaling::sweep(&grid, &mix, &schedule, &seeds)?;

    let failed: std::collections::BTreeMap<usize, &str> = report
        .failures
        .iter()
        .map(|f| (f.index, f.message.as_str()))
        .collect();
    let mut records = report.records.iter();
    let mut combined = String::from(
        "index,dim,variant,time,beta,seed,H_mean,H_se,Htilde_mean,Htilde_se,\
         diam_mean,diam_se,volume_mean,volume_se,min_extent\n",
    );
    for index in 0..grid.len() {
        if failed.contains_key(&index) {
            continue;
        }
        let record = records
            .next()
            .ok_or_else(|| CliError::Core(wulff_core::Error::numerical(
                "sweep produced fewer records than surviving grid points",
            )))?;
        run.write_in(
            "records",
            &format!("point-{index:03}.json"),
            &to_pretty(record)?,
        )?;
        if let Some(sites) = &record.shape_snapshot {
            run.write_in("snapshots", &format!("point-{index:03}.sites"), sites)?;
        }
        let stat = |key: &str| -> (f64, f64) {
            record
                .summary(key)
                .map(|s| (s.mean, s.se))
                .unwrap_or((f64::NAN, f64::NAN))
        };
        let (h_mean, h_se) = stat("H");
        let (ht_mean, ht_se) = stat("Htilde");
        let (d_mean, d_se) = stat("diam");
        let (v_mean, v_se) = stat("volume");
        let min_extent = record.min_extents.iter().copied().min().unwrap_or(0);
        combined.push_str(&format!(
            "{index},{dim},{variant},{time},{beta},{seed},{h_mean},{h_se},{ht_mean},{ht_se},\
             {d_mean},{d_se},{v_mean},{v_se},{min_extent}\n",
            variant = variant_label(record.config.variant),
            time = record.config.ensemble.time_scale(),
            beta = record.config.beta,
            seed = record.seed,
        ));
    }
    run.write("combined.csv", &combined)?;
    if !report.failures.is_empty() {
        run.write("failures.json", &to_pretty(&report.failures)?)?;
        for failure in &report.failures {
            eprintln!("point {} failed: {}", failure.index, failure.message);
        }
    }

    let mut echo = ConfigMap::new();
    echo.set("dim", dim);
    echo.set("variant", variant_label(variant));
    echo.set(
        "beta_list",
        betas
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    if !steps_list.is_empty() {
        echo.set(
            "steps_list",
            steps_list
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
    } else {
        echo.set(
            "horizon_time_list",
            horizon_list
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    echo.set("seed", master_seed);
    echo.set("burn_in_sweeps", schedule.burn_in);
    echo.set("samples", schedule.samples);
    echo.set("thinning_sweeps", schedule.thinning);
    echo.set("move_mix", map.str_or("move_mix", "default"));

    println!("points = {}", grid.len());
    println!("records = {}", report.records.len());
    println!("failures = {}", report.failures.len());
    let manifest = run.finalize("sweep", Some(master_seed), &echo)?;
    announce(&manifest);
    Ok(())
}

// ---------------------------------------------------------------- oracle

const ORACLE_KEYS: &[&str] = &[
    "dim",
    "beta",
    "variant",
    "steps",
    "horizon_time",
    "truncation_depth",
    "tolerance",
];

pub fn oracle(args: &OracleArgs, mut map: ConfigMap, out_dir: Option<&Path>) -> CliResult<()> {
    args.model.overlay(&mut map);
    if args.model.seed.is_some() {
        return Err(usage("the oracle is deterministic; --seed does not apply"));
    }
    map.overlay("truncation_depth", args.truncation_depth);
    map.overlay("tolerance", args.tolerance);
    map.restrict(ORACLE_KEYS)?;

    let config = gibbs_from(&map)?;
    let mut echo = ConfigMap::new();
    echo_gibbs(&mut echo, &config);
    let result: OracleResult = match config.ensemble {
        Ensemble::DiscreteSkeleton { .. } => discrete_oracle(&config)?,
        Ensemble::ContinuousTime { .. } => {
            let depth = map.usize_or("truncation_depth", MAX_TRUNCATION_DEPTH)?;
            let tolerance = map.f64_or("tolerance", 1e-8)?;
            echo.set("truncation_depth", depth);
            echo.set("tolerance", tolerance);
            continuous_oracle(&config, depth, tolerance)?
        }
    };

    let mut run = RunDir::create(out_dir, "oracle")?;
    run.write("oracle.json", &to_pretty(&result)?)?;

    println!("z = {}", result.z);
    println!("log_z = {}", result.log_z);
    for (key, value) in &result.expectations {
        println!("E[{key}] = {value}");
    }
    if result.truncation_bound > 0.0 {
        println!("truncation_bound = {}", result.truncation_bound);
    }
    let manifest = run.finalize("oracle", None, &echo)?;
    announce(&manifest);
    Ok(())
}

// ---------------------------------------------------------- isoperimetry

const ISO_KEYS: &[&str] = &["dim", "max_size"];

pub fn isoperimetry(args: &IsoArgs, mut map: ConfigMap, out_dir: Option<&Path>) -> CliResult<()> {
    map.overlay("dim", args.dim);
    map.overlay("max_size", args.max_size);
    map.restrict(ISO_KEYS)?;

    let dim = map.usize_or("dim", 2)?;
    if dim != 2 {
        return Err(usage(format!(
            "the connected-set enumeration is two-dimensional; got dim {dim}"
        )));
    }
    let max_size = map.usize_or("max_size", 8)?;

    let mut csv =
        String::from("size,inner,outer,outer_edges,hull_outer,rectangle_ok,volume_ok\n");
    let mut rectangle_violations: Vec<u64> = vec![0; max_size];
    let mut volume_violations: Vec<u64> = vec![0; max_size];
    let counts = for_each_animal(max_size, |size, sites| {
        let stats = analyze_animal(sites)?;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            stats.size,
            stats.inner,
            stats.outer,
            stats.outer_edges,
            stats.hull_outer,
            stats.rectangle_holds,
            stats.volume_holds
        ));
        if !stats.rectangle_holds {
            rectangle_violations[size - 1] += 1;
        }
        if !stats.volume_holds {
            volume_violations[size - 1] += 1;
        }
        Ok(())
    })?;

    let mut run = RunDir::create(out_dir, "isoperimetry")?;
    run.write("animals.csv", &csv)?;
    let sizes: Vec<_> = (1..=max_size)
        .map(|size| {
            serde_json::json!({
                "size": size,
                "animals": counts[size - 1],
                "rectangle_violations": rectangle_violations[size - 1],
                "volume_violations": volume_violations[size - 1],
            })
        })
        .collect();
    let total_animals: u64 = counts.iter().sum();
    let summary = serde_json::json!({
        "dim": dim,
        "max_size": max_size,
        "total_animals": total_animals,
        "sizes": sizes,
    });
    run.write("summary.json", &to_pretty(&summary)?)?;

    println!("animals = {total_animals}");
    println!(
        "rectangle_violations = {}",
        rectangle_violations.iter().sum::<u64>()
    );
    println!(
        "volume_violations = {}",
        volume_violations.iter().sum::<u64>()
    );

    let mut echo = ConfigMap::new();
    echo.set("dim", dim);
    echo.set("max_size", max_size);
    let manifest = run.finalize("isoperimetry", None, &echo)?;
    announce(&manifest);
    Ok(())
}

// ---------------------------------------------------------------- tilted

const TILTED_KEYS: &[&str] = &["dim", "half_width", "smoothing_floor"];

pub fn tilted(args: &TiltedArgs, mut map: ConfigMap, out_dir: Option<&Path>) -> CliResult<()> {
    map.overlay("dim", args.dim);
    map.overlay("half_width", args.half_width);
    map.overlay("smoothing_floor", args.smoothing_floor);
    map.restrict(TILTED_KEYS)?;

    let dim = map.usize_or("dim", 2)?;
    let half_width = map.i64_or("half_width", 8)?;
    let floor = map.f64_or("smoothing_floor", DEFAULT_SMOOTHING_FLOOR)?;

    let mut run = RunDir::create(out_dir, "tilted")?;
    match dim {
        1 => tilted_dim::<1>(half_width, floor, args.gap, &mut run)?,
        2 => tilted_dim::<2>(half_width, floor, args.gap, &mut run)?,
        3 => tilted_dim::<3>(half_width, floor, args.gap, &mut run)?,
        4 => tilted_dim::<4>(half_width, floor, args.gap, &mut run)?,
        other => return Err(usage(format!("dim {other} unsupported; this build handles 1..=4"))),
    }

    let mut echo = ConfigMap::new();
    echo.set("dim", dim);
    echo.set("half_width", half_width);
    echo.set("smoothing_floor", floor);
    let manifest = run.finalize("tilted", None, &echo)?;
    announce(&manifest);
    Ok(())
}

fn tilted_dim<const D: usize>(
    half_width: i64,
    floor: f64,
    gap: bool,
    run: &mut RunDir,
) -> CliResult<()> {
    let profile = build_profile::<D>(half_width, floor)?;
    let generator = TiltedGenerator::new(&profile);
    let db_residual = generator.detailed_balance_residual();
    let stationarity_residual = generator.stationarity_residual();

    let mut csv = String::from("level,sites,site_mass,level_mass\n");
    for r in 1..=half_width as usize {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r,
            profile.shell_size(r)?,
            profile.mu(r)?,
            profile.shell_mass(r)?
        ));
    }
    run.write("profile.csv", &csv)?;

    let (spectral, route_bound) = if gap {
        (
            Some(spectral_gap(&profile)?),
            Some(canonical_path_bound(&profile)?),
        )
    } else {
        (None, None)
    };
    let report = serde_json::json!({
        "dim": D,
        "half_width": half_width,
        "smoothing_floor": floor,
        "support_sites": profile.support_count(),
        "detailed_balance_residual": db_residual,
        "stationarity_residual": stationarity_residual,
        "spectral_gap": spectral,
        "canonical_path_bound": route_bound,
        "gap_at_least_inverse_bound": match (spectral, route_bound) {
            (Some(g), Some(b)) => Some(g >= 1.0 / b),
            _ => None,
        },
    });
    run.write("tilted.json", &to_pretty(&report)?)?;

    println!("support_sites = {}", profile.support_count());
    println!("detailed_balance_residual = {db_residual}");
    println!("stationarity_residual = {stationarity_residual}");
    if let (Some(g), Some(b)) = (spectral, route_bound) {
        println!("spectral_gap = {g}");
        println!("canonical_path_bound = {b}");
        println!("gap_at_least_inverse_bound = {}", g >= 1.0 / b);
    }
    Ok(())
}

// ------------------------------------------------------------------- fit

const FIT_KEYS: &[&str] = &["observable", "bootstrap_seed", "records_dir"];

pub fn fit(args: &FitArgs, mut map: ConfigMap, out_dir: Option<&Path>) -> CliResult<()> {
    map.overlay("observable", args.observable.clone());
    map.overlay("bootstrap_seed", args.bootstrap_seed);
    map.set("records_dir", args.records.display());
    map.restrict(FIT_KEYS)?;

    let observable = match map.str_or("observable", "diam") {
        "diam" => FitObservable::Diameter,
        "volume" => FitObservable::Volume,
        other => {
            return Err(usage(format!(
                "observable {other:?} unknown; expected diam or volume"
            )))
        }
    };
    let bootstrap_seed = map.u64_or("bootstrap_seed", DEFAULT_SEED)?;

    let mut names: Vec<String> = Vec::new();
    for entry in std::fs::read_dir(&args.records)? {
        let entry = entry?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if name.starts_with("point-") && name.ends_with(".json") {
            names.push(name.to_string());
        }
    }
    if names.is_empty() {
        return Err(usage(format!(
            "no point-*.json records found in {}",
            args.records.display()
        )));
    }
    names.sort();
    let mut records: Vec<RunRecord> = Vec::with_capacity(names.len());
    for name in &names {
        let text = std::fs::read_to_string(args.records.join(name))?;
        let record: RunRecord = serde_json::from_str(&text).map_err(|e| {
            usage(format!("{name} is not a sweep record: {e}"))
        })?;
        records.push(record);
    }

    let result = fit_exponent(&records, observable, bootstrap_seed)?;

    let mut run = RunDir::create(out_dir, "fit")?;
    run.write("fit.json", &to_pretty(&result)?)?;

    println!("observable = {}", result.observable);
    println!("records = {}", records.len());
    println!("slope = {}", result.slope);
    println!("intercept = {}", result.intercept);
    println!("ci = [{}, {}]", result.ci.0, result.ci.1);

    let mut echo = ConfigMap::new();
    echo.set("observable", map.str_or("observable", "diam"));
    echo.set("bootstrap_seed", bootstrap_seed);
    echo.set("records_dir", args.records.display());
    let manifest = run.finalize("fit", Some(bootstrap_seed), &echo)?;
    announce(&manifest);
    Ok(())
}

// ------------------------------------------------------------ exit-bound

const EXIT_KEYS: &[&str] = &["min_width", "max_width", "t_points"];

pub fn exit_bound(args: &ExitBoundArgs, mut map: ConfigMap, out_dir: Option<&Path>) -> CliResult<()> {
    map.overlay("min_width", args.min_width);
    map.overlay("max_width", args.max_width);
    map.overlay("t_points", args.t_points);
    map.restrict(EXIT_KEYS)?;

    let min_width = map.usize_or("min_width", 5)?;
    let max_width = map.usize_or("max_width", 50)?;
    let t_points = map.usize_or("t_points", 20)?;
    if min_width < 1 || min_width > max_width {
        return Err(usage(format!(
            "need 1 <= min_width <= max_width, got {min_width}..{max_width}"
        )));
    }
    if max_width > MAX_EXIT_WIDTH {
        return Err(CliError::Core(wulff_core::Error::resource(format!(
            "exit tabulation caps interval widths at {MAX_EXIT_WIDTH} (requested {max_width})"
        ))));
    }
    if t_points == 0 || t_points > 10_000 {
        return Err(usage(format!("t_points must be in 1..=10000, got {t_points}")));
    }

    let mut csv = String::from("width,start,t,survival,bound,ok\n");
    let mut violations = 0u64;
    let mut rows = 0u64;
    for width in min_width..=max_width {
        let start = (width + 1) / 2;
        for i in 1..=t_points {
            let t = i as f64 * (width * width) as f64 / 10.0;
            let survival = exit_time_tail(width, start, t)?;
            let bound = exit_tail_bound(width, t);
            let ok = survival <= bound + EXIT_BOUND_SLACK;
            if !ok {
                violations += 1;
            }
            rows += 1;
            csv.push_str(&format!("{width},{start},{t},{survival},{bound},{ok}\n"));
        }
    }

    let mut run = RunDir::create(out_dir, "exit-bound")?;
    run.write("exit_bound.csv", &csv)?;

    println!("rows = {rows}");
    println!("violations = {violations}");

    let mut echo = ConfigMap::new();
    echo.set("min_width", min_width);
    echo.set("max_width", max_width);
    echo.set("t_points", t_points);
    let manifest = run.finalize("exit-bound", None, &echo)?;
    announce(&manifest);
    Ok(())
}
