//! The `hstc` command line: train, eval, map, bands, synth.

pub mod config;
pub mod pgm;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hstc::bands::{band_importance, normalize_features};
use hstc::data::{
    extract_patch, load_cube, load_labels, load_model, save_cube, save_labels, save_model, split_per_class,
    split_pixels, HyperCube, LabelMap, Model, ModelFile, Pixel,
};
use hstc::fnn::{dense_fnn_param_count, fit_rank1_fnn};
use hstc::linear::{fit_tensor_lr, vector_lr_param_count};
use hstc::synthetic::{planted_band_cube, BandCubeSpec};

use config::{check_inputs, check_window, default_labels, BandsArgs, Command, EvalArgs, MapArgs, ModelKind, SynthArgs, TrainArgs};
use report::{EvalReport, ReportContext};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config, missing input files.
    Usage(String),
    Run(hstc::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Run(hstc::Error::Config(_)) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<hstc::Error> for CliError {
    fn from(e: hstc::Error) -> Self {
        CliError::Run(e)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Run(hstc::Error::Io { path: path.display().to_string(), source: e })
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Worker count from `HSTC_THREADS` (default 1).
pub fn thread_count() -> Result<usize, CliError> {
    match std::env::var("HSTC_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Usage(format!("HSTC_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

/// Zero-based predicted class for each pixel, in input order. Pixels are cut
/// into contiguous chunks, one per worker, and reassembled in order.
pub fn predict_pixels(
    model: &Model,
    cube: &HyperCube,
    pixels: &[Pixel],
    window: usize,
    threads: usize,
) -> Result<Vec<usize>, hstc::Error> {
    let run = |chunk: &[Pixel]| -> Result<Vec<usize>, hstc::Error> {
        chunk
            .iter()
            .map(|p| model.predict_class(&extract_patch(cube, p.row, p.col, window)?))
            .collect()
    };
    if threads <= 1 || pixels.len() < 2 {
        return run(pixels);
    }
    let size = pixels.len().div_ceil(threads);
    let parts: Vec<Result<Vec<usize>, hstc::Error>> = std::thread::scope(|s| {
        let handles: Vec<_> = pixels.chunks(size).map(|c| s.spawn(move || run(c))).collect();
        handles.into_iter().map(|h| h.join().expect("prediction worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(pixels.len());
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Map(a) => map(a),
        Command::Bands(a) => bands(a),
        Command::Synth(a) => synth(a),
    }
}

fn load_inputs(cube: &Path, labels: Option<PathBuf>) -> Result<(HyperCube, LabelMap), CliError> {
    let labels = labels.unwrap_or_else(|| default_labels(cube));
    check_inputs(cube, &labels)?;
    let cube = load_cube(cube)?;
    let labels = load_labels(&labels, cube.height(), cube.width())?;
    hstc::data::check_labels(&cube, &labels)?;
    Ok((cube, labels))
}

fn load_model_file(path: &Path) -> Result<ModelFile, CliError> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("file not found: {}", path.display())));
    }
    Ok(load_model(path)?)
}

fn check_fit(model: &Model, cube: &HyperCube, labels: &LabelMap, window: usize) -> Result<(), CliError> {
    let expected = [window, window, cube.bands()];
    if model.input_shape() != expected {
        return Err(CliError::Run(hstc::Error::Shape(format!(
            "model expects {:?} patches but window {window} on a {}-band cube gives {:?}",
            model.input_shape(),
            cube.bands(),
            expected
        ))));
    }
    if labels.num_classes() > model.num_classes() {
        return Err(CliError::Run(hstc::Error::Shape(format!(
            "labels use {} classes but the model has {}",
            labels.num_classes(),
            model.num_classes()
        ))));
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    let plan = args.resolve()?;
    let cube = load_cube(&plan.cube)?;
    let labels = load_labels(&plan.labels, cube.height(), cube.width())?;
    let (train, _) = split_per_class(&cube, &labels, plan.samples_per_class, plan.train.seed, plan.window)?;
    let (train, stats) = normalize_features(&train)?;
    let classes = train.num_classes();
    let weight_shape = {
        let mut s = train.shape().to_vec();
        if plan.train.augment_ones {
            *s.last_mut().unwrap() += 1;
        }
        s
    };
    let (model, trace, vectorized) = match plan.model_type {
        ModelKind::TensorLr => {
            let (mut m, t) = fit_tensor_lr(&train, &plan.train)?;
            m.transform_mut().scaling = Some(stats);
            (Model::TensorLr(m), t, vector_lr_param_count(&weight_shape, classes))
        }
        ModelKind::Rank1Fnn => {
            let (mut m, t) = fit_rank1_fnn(&train, &plan.train, plan.hidden)?;
            m.transform_mut().scaling = Some(stats);
            (Model::Rank1Fnn(m), t, dense_fnn_param_count(&weight_shape, plan.hidden, classes))
        }
    };
    println!(
        "parameters: {} {}, vectorized {}",
        plan.model_type.name(),
        model.param_count(),
        vectorized
    );
    println!(
        "trained on {} patches: {} sweeps, objective {:.6}",
        train.len(),
        trace.sweeps,
        trace.final_objective()
    );
    ensure_dir(&plan.out)?;
    let file = ModelFile { model, provenance: Some(plan.provenance()) };
    let model_path = plan.out.join("model.json");
    save_model(&model_path, &file)?;
    write_file(&plan.out.join("trace.csv"), trace.to_csv())?;
    println!("wrote {}", model_path.display());
    Ok(())
}

fn pick_split<T>(flag: Option<T>, recorded: Option<T>, name: &str) -> Result<T, CliError> {
    flag.or(recorded)
        .ok_or_else(|| CliError::Usage(format!("the model file records no split; pass --{name}")))
}

fn eval(args: EvalArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let threads = thread_count()?;
    let file = load_model_file(&args.input.model)?;
    let (cube, labels) = load_inputs(&args.input.cube, args.input.labels)?;
    let prov = file.provenance.clone();
    let seed = pick_split(args.split.seed, prov.as_ref().map(|p| p.seed), "seed")?;
    let spc = pick_split(args.split.samples_per_class, prov.as_ref().map(|p| p.samples_per_class), "samples-per-class")?;
    let window = pick_split(args.split.window, prov.as_ref().map(|p| p.window), "window")?;
    check_window(window)?;
    check_fit(&file.model, &cube, &labels, window)?;
    let plan = split_pixels(&labels, spc, seed)?;
    let predicted = predict_pixels(&file.model, &cube, &plan.test, window, threads)?;
    let truth: Vec<usize> = plan.test.iter().map(|p| p.class - 1).collect();
    let ctx = ReportContext {
        model_type: file.model.model_type().to_string(),
        seed,
        samples_per_class: spc,
        window,
        train_count: plan.train.len(),
    };
    let report = EvalReport::from_predictions(ctx, file.model.num_classes(), &truth, &predicted);
    ensure_dir(&args.input.out)?;
    write_file(&args.input.out.join("report.json"), report.to_json())?;
    write_file(&args.input.out.join("report.csv"), report.to_csv())?;
    println!(
        "overall accuracy {:.4} ({}/{} test pixels) in {:.2}s",
        report.overall_accuracy,
        report.correct,
        report.test_count,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn map(args: MapArgs) -> Result<(), CliError> {
    let threads = thread_count()?;
    let file = load_model_file(&args.input.model)?;
    let (cube, labels) = load_inputs(&args.input.cube, args.input.labels)?;
    let window = args
        .window
        .or(file.provenance.as_ref().map(|p| p.window))
        .ok_or_else(|| CliError::Usage("the model file records no window; pass --window".into()))?;
    check_window(window)?;
    check_fit(&file.model, &cube, &labels, window)?;
    let pixels: Vec<Pixel> = labels.labeled_pixels().collect();
    let predicted: Vec<usize> =
        predict_pixels(&file.model, &cube, &pixels, window, threads)?.into_iter().map(|k| k + 1).collect();
    let (classes, errors) = pgm::render(&labels, &predicted, file.model.num_classes());
    ensure_dir(&args.input.out)?;
    let (w, h) = (labels.width(), labels.height());
    for (name, img) in [("class_map.pgm", &classes), ("misclassified.pgm", &errors)] {
        let path = args.input.out.join(name);
        pgm::write(&path, w, h, img).map_err(io_err(&path))?;
    }
    let wrong = errors.iter().filter(|&&v| v == pgm::WRONG).count();
    println!("{} labeled pixels, {} misclassified", pixels.len(), wrong);
    Ok(())
}

fn bands(args: BandsArgs) -> Result<(), CliError> {
    if args.n == 0 {
        return Err(CliError::Usage("n must be at least 1".into()));
    }
    let file = load_model_file(&args.model)?;
    let model = match &file.model {
        Model::TensorLr(m) => m,
        other => {
            return Err(CliError::Run(hstc::Error::Unsupported(format!(
                "band ranking needs a tensor_lr model, got {}",
                other.model_type()
            ))))
        }
    };
    let ranking = band_importance(model);
    if args.n > ranking.len() {
        return Err(CliError::Usage(format!("n = {} exceeds the {} bands of the model", args.n, ranking.len())));
    }
    let top = ranking.top(args.n)?;
    let mut csv = String::from("rank,band,score\n");
    let mut rows = Vec::new();
    for (r, &b) in top.iter().enumerate() {
        csv.push_str(&format!("{},{},{}\n", r + 1, b + 1, ranking.scores[b]));
        rows.push(serde_json::json!({ "rank": r + 1, "band": b + 1, "score": ranking.scores[b] }));
        println!("{:>4}  band {:>4}  {:.6}", r + 1, b + 1, ranking.scores[b]);
    }
    ensure_dir(&args.out)?;
    write_file(&args.out.join("bands.csv"), csv)?;
    let mut json = serde_json::to_string_pretty(&serde_json::json!({ "bands": rows })).expect("serializes");
    json.push('\n');
    write_file(&args.out.join("bands.json"), json)
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let spec = BandCubeSpec::default();
    let (cube, labels) = planted_band_cube(&spec, args.seed)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    save_cube(&args.out, &cube)?;
    let labels_path = default_labels(&args.out);
    save_labels(&labels_path, &labels)?;
    let informative: Vec<usize> = spec.informative.iter().map(|b| b + 1).collect();
    println!(
        "{}x{}x{} cube, {} classes, informative bands {:?}",
        spec.height, spec.width, spec.bands, spec.classes, informative
    );
    Ok(())
}
