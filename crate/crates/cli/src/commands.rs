use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use arn_core::compiler::{compile, emit_graph, emit_readable};
use arn_core::data::{self, Dataset, PendulumParams, Series, Target};
use arn_core::dsl::{self, TypedProgram};
use arn_core::evolve::{self, EvalContext, EvolveConfig, StagePlan};
use arn_core::model::{self, Network, NetworkConfig, Task};
use arn_core::stats;
use arn_core::tensor::{InitOptions, Tensor};
use arn_core::trainer::{self, SearchSpace, TrainConfig};
use arn_core::zoo;

use crate::files::{self, SavedModel, MODEL_FORMAT, MODEL_VERSION};
use crate::{Command, Emit, Failure, SplitName, TaskArg, ZooAction};

const CONFIG_HEADER: &str = "# arn-train-config 1\n";
const SUMMARY_HEADER: &str = "# arn-summary 1\n";
const HISTORY_HEADER: &str = "# arn-history 1\n";
const AUDIT_HEADER: &str = "{\"format\":\"arn-audit\",\"version\":1}\n";

pub fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::GenPendulum { series, steps, seed, dt, out } => gen_pendulum(series, steps, seed, dt, &out),
        Command::Train { neuron, data, config, out, nodes, seed } => train(&neuron, &data, config.as_deref(), &out, nodes, seed),
        Command::Eval { model, data, split, predictions } => eval(&model, &data, split, predictions.as_deref()),
        Command::Evolve { data, plan, generations, population, seed, out, neuron, config, workers, resume } => {
            let args = EvolveArgs { data, plan, generations, population, seed, out, neuron, config, resume };
            match workers {
                Some(n) => {
                    let pool = rayon_pool(n)?;
                    pool.install(|| evolve_cmd(&args))
                }
                None => evolve_cmd(&args),
            }
        }
        Command::Compile { neuron, emit, nodes, inputs } => compile_cmd(&neuron, emit, nodes, inputs),
        Command::Zoo { action } => {
            match action {
                ZooAction::List => {
                    for (name, desc, _) in zoo::ZOO {
                        println!("{name:<16}{desc}");
                    }
                }
                ZooAction::Show { name } => {
                    let src = zoo::source(&name).ok_or_else(|| Failure::Usage(format!("no zoo neuron named {name}")))?;
                    print!("{src}");
                }
            }
            Ok(())
        }
        Command::Compare { a, b, targets, task } => compare(&a, &b, &targets, task),
        Command::Search { data, budget, seed, neuron, nodes, examples, config, space, out } => {
            // only evolve runs on several workers
            rayon_pool(1)?.install(|| search(&data, budget, seed, &neuron, nodes, examples, config.as_deref(), space.as_deref(), &out))
        }
    }
}

fn rayon_pool(n: usize) -> Result<rayon::ThreadPool, Failure> {
    if n == 0 {
        return Err(Failure::Usage("--workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Failure::Usage(e.to_string()))
}

fn load_neuron(spec: &str) -> Result<TypedProgram, Failure> {
    let (origin, src) = match spec.strip_prefix("zoo:") {
        Some(name) => (spec.to_owned(), zoo::source(name).ok_or_else(|| Failure::Usage(format!("no zoo neuron named {name}")))?.to_owned()),
        None => (spec.to_owned(), files::read_text(Path::new(spec))?),
    };
    let p = dsl::parse(&src).map_err(|e| Failure::Data(format!("{origin}: {e}")))?;
    dsl::typecheck(&p).map_err(|e| Failure::Data(format!("{origin}: {e}")))
}

fn load_dataset(path: &Path) -> Result<Dataset, Failure> {
    data::load_csv(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<TrainConfig, Failure> {
    match path {
        None => Ok(TrainConfig::default()),
        Some(p) => TrainConfig::from_toml(&files::read_text(p)?).map_err(|e| Failure::Data(format!("{}: {e}", p.display()))),
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))
}

fn gen_pendulum(series: usize, steps: usize, seed: u64, dt: f64, out: &Path) -> Result<(), Failure> {
    if steps < 2 || series == 0 || !(dt > 0.0) {
        return Err(Failure::Usage("need --series >= 1, --steps >= 2 and --dt > 0".into()));
    }
    let params = PendulumParams { series, steps, dt_sample: dt, seed };
    let d = match data::cache_dir() {
        Some(dir) => {
            let path = dir.join(format!("pendulum-{series}-{steps}-{}-{seed}.bin", dt.to_bits()));
            match data::load_snapshot(&path) {
                Ok(d) => d,
                Err(_) => {
                    let d = data::gen_double_pendulum(&params);
                    let _ = fs::create_dir_all(&dir);
                    let _ = data::save_snapshot(&d, &path);
                    d
                }
            }
        }
        None => data::gen_double_pendulum(&params),
    };
    let file = fs::File::create(out).map_err(|e| Failure::Data(format!("{}: {e}", out.display())))?;
    data::write_csv(&d, std::io::BufWriter::new(file)).map_err(|e| Failure::Data(e.to_string()))
}

struct Prepared {
    data: Dataset,
    splits: data::Splits,
    scaling: data::Scaling,
}

fn prepare(raw: &Dataset, split_seed: u64) -> Result<Prepared, Failure> {
    let splits = data::split(raw.len(), split_seed).map_err(|e| Failure::Data(e.to_string()))?;
    let (data, scaling) = data::preprocess(raw, &splits.train);
    Ok(Prepared { data, splits, scaling })
}

fn train(neuron: &str, data_path: &Path, config: Option<&Path>, out: &Path, nodes: usize, seed: Option<u64>) -> Result<(), Failure> {
    let program = load_neuron(neuron)?;
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let raw = load_dataset(data_path)?;
    let prep = prepare(&raw, cfg.seed)?;
    let net_cfg = NetworkConfig { nodes, inputs: raw.inputs, outputs: raw.outputs, task: raw.task };
    let mut net = Network::new(&program, net_cfg, cfg.seed, &InitOptions::default()).map_err(|e| Failure::Usage(e.to_string()))?;
    let tr = prep.data.refs(&prep.splits.train);
    let va = prep.data.refs(&prep.splits.validation);
    let result = trainer::train(&mut net, &tr, &va, &cfg).map_err(|e| Failure::Data(e.to_string()))?;
    create_dir(out)?;
    let mut hist = String::from(HISTORY_HEADER);
    hist.push_str("examples,updates,train_loss,val_loss,lr\n");
    for h in &result.history {
        let _ = writeln!(hist, "{},{},{:?},{:?},{:?}", h.examples, h.updates, h.train_loss, h.val_loss, h.lr);
    }
    files::write_text(&out.join("history.csv"), &hist)?;
    let mut summary = String::from(SUMMARY_HEADER);
    let _ = writeln!(summary, "neuron = {neuron}");
    let _ = writeln!(summary, "nodes = {nodes}");
    let _ = writeln!(summary, "weights = {}", net.weights.count());
    let _ = writeln!(summary, "updates = {}", result.updates);
    let _ = writeln!(summary, "evaluations = {}", result.evaluations);
    let _ = writeln!(summary, "diverged = {}", result.diverged);
    let _ = writeln!(summary, "best_val_loss = {:?}", result.best.val_loss);
    let _ = writeln!(summary, "best_examples = {}", result.best.examples);
    files::write_text(&out.join("summary.txt"), &summary)?;
    files::write_text(&out.join("config.toml"), &format!("{CONFIG_HEADER}{}", cfg.to_toml()))?;
    if !result.best.val_loss.is_finite() {
        return Err(Failure::Numeric("training diverged; no finite validation loss".into()));
    }
    let saved = SavedModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        neuron: dsl::pretty_print(&program.program),
        network: net_cfg,
        train: cfg,
        split_seed: cfg.seed,
        scaling: prep.scaling,
        val_loss: result.best.val_loss,
        examples: result.best.examples,
        weights: result.best.weights,
    };
    let json = serde_json::to_string(&saved).map_err(|e| Failure::Data(e.to_string()))?;
    files::write_text(&out.join("model.json"), &json)?;
    print!("{}", &summary[SUMMARY_HEADER.len()..]);
    Ok(())
}

fn eval(model_dir: &Path, data_path: &Path, split: SplitName, predictions: Option<&Path>) -> Result<(), Failure> {
    let saved = files::load_model(model_dir)?;
    let program = dsl::parse(&saved.neuron)
        .and_then(|p| dsl::typecheck(&p))
        .map_err(|e| Failure::Data(format!("stored neuron: {e}")))?;
    let net = Network::with_weights(&program, saved.network, saved.weights).map_err(|e| Failure::Data(e.to_string()))?;
    let raw = load_dataset(data_path)?;
    if raw.inputs != saved.network.inputs || raw.outputs != saved.network.outputs || raw.task != saved.network.task {
        return Err(Failure::Data("dataset shape does not match the model".into()));
    }
    let splits = data::split(raw.len(), saved.split_seed).map_err(|e| Failure::Data(e.to_string()))?;
    let scaled = saved.scaling.apply(&raw);
    let (name, idx) = match split {
        SplitName::Train => ("train", &splits.train),
        SplitName::Validation => ("validation", &splits.validation),
        SplitName::Test => ("test", &splits.test),
    };
    let series = scaled.refs(idx);
    let preds = model::predict(&net, &series, saved.train.eval_batch).map_err(|e| Failure::Data(e.to_string()))?;
    let m = model::metrics(&preds, &series);
    if !m.loss.is_finite() {
        return Err(Failure::Numeric("non-finite loss".into()));
    }
    println!("split,examples,loss,accuracy");
    let acc = m.accuracy.map_or(String::new(), |a| format!("{a:?}"));
    println!("{name},{},{:?},{acc}", m.examples, m.loss);
    if let Some(path) = predictions {
        let rows: Vec<(String, Tensor, usize)> = series
            .iter()
            .zip(preds)
            .map(|(s, p)| match &s.target {
                Target::Class(_) => (s.id.clone(), p, s.timesteps() - 1),
                Target::Values(_) => (s.id.clone(), saved.scaling.invert_targets(&p), 0),
            })
            .collect();
        files::write_predictions(path, &rows)?;
    }
    Ok(())
}

struct EvolveArgs {
    data: PathBuf,
    plan: Option<PathBuf>,
    generations: usize,
    population: usize,
    seed: u64,
    out: PathBuf,
    neuron: String,
    config: Option<PathBuf>,
    resume: Option<PathBuf>,
}

fn evolve_cmd(a: &EvolveArgs) -> Result<(), Failure> {
    let seed_program = load_neuron(&a.neuron)?;
    let plan = match &a.plan {
        Some(p) => StagePlan::from_toml(&files::read_text(p)?).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
        None => StagePlan::first_stage_only(),
    };
    let mut base = load_config(a.config.as_deref())?;
    base.seed = a.seed;
    let raw = load_dataset(&a.data)?;
    let prep = prepare(&raw, a.seed)?;
    let ctx = EvalContext::new(&prep.data, &prep.splits, plan, base).map_err(|e| Failure::Data(e.to_string()))?;
    let resume = match &a.resume {
        Some(p) => Some(evolve::load_front(&files::read_text(p)?).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?.0),
        None => None,
    };
    create_dir(&a.out)?;
    let audit_path = a.out.join("audit.jsonl");
    let mut audit = std::io::BufWriter::new(fs::File::create(&audit_path).map_err(|e| Failure::Data(format!("{}: {e}", audit_path.display())))?);
    use std::io::Write;
    audit.write_all(AUDIT_HEADER.as_bytes()).map_err(|e| Failure::Data(e.to_string()))?;
    let mut io_error = None;
    let cfg = EvolveConfig { generations: a.generations, population: a.population, seed: a.seed };
    let out = a.out.clone();
    let result = evolve::evolve_run(&seed_program, &ctx, &cfg, resume, &mut |g, front, records| {
        let snap = serde_json::to_string_pretty(&front.to_snapshot(g)).expect("snapshot serialises");
        let r = fs::write(out.join(format!("front-gen{g:04}.json")), snap)
            .and_then(|_| evolve::write_audit(records, &mut audit))
            .and_then(|_| audit.flush());
        if let Err(e) = r {
            io_error.get_or_insert(e);
        }
        let best = front.best().map_or(f64::INFINITY, |e| e.loss);
        eprintln!("generation {g}: front {} best {best:.6}", front.len());
    });
    if let Some(e) = io_error {
        return Err(Failure::Data(format!("{}: {e}", a.out.display())));
    }
    let snap = serde_json::to_string_pretty(&result.front.to_snapshot(a.generations)).expect("snapshot serialises");
    files::write_text(&a.out.join("front.json"), &snap)?;
    let mut scatter = Vec::new();
    evolve::write_scatter(&result.front, &mut scatter).map_err(|e| Failure::Data(e.to_string()))?;
    files::write_text(&a.out.join("front.csv"), &String::from_utf8_lossy(&scatter))?;
    if result.front.is_empty() {
        return Err(Failure::Numeric("no candidate produced a finite loss".into()));
    }
    println!("seed_loss = {:?}", result.seed_value);
    println!("evaluations = {}", result.evaluations);
    println!("complexity_bits,validation_loss,id");
    for e in result.front.entries() {
        println!("{:?},{:?},{}", e.complexity, e.loss, e.id);
    }
    Ok(())
}

fn compile_cmd(neuron: &str, emit: Emit, nodes: usize, inputs: usize) -> Result<(), Failure> {
    let program = load_neuron(neuron)?;
    NetworkConfig { nodes, inputs, outputs: 1, task: Task::Regression }.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let k = compile(&program, nodes, inputs).map_err(|e| Failure::Usage(e.to_string()))?;
    match emit {
        Emit::C => print!("{}", emit_readable(&k)),
        Emit::Graph => print!("{}", emit_graph(&k)),
    }
    Ok(())
}

fn compare(a: &Path, b: &Path, targets: &Path, task: TaskArg) -> Result<(), Failure> {
    let pa = files::read_predictions(a)?;
    let pb = files::read_predictions(b)?;
    let d = load_dataset(targets)?;
    let mismatch = |what: &str| Failure::Data(format!("{what} disagrees with the targets file"));
    let lookup = |p: &std::collections::HashMap<String, Vec<Vec<f64>>>, s: &Series| p.get(&s.id).cloned();
    let mut loss = (0.0, 0.0);
    let mut n = 0usize;
    println!("# arn-compare 1");
    match task {
        TaskArg::Cls => {
            if d.task != Task::Classification {
                return Err(mismatch("task"));
            }
            let (mut hits_a, mut hits_b, mut b_only, mut c_only) = (0u64, 0u64, 0u64, 0u64);
            for s in &d.series {
                let (Some(ra), Some(rb)) = (lookup(&pa, s), lookup(&pb, s)) else { continue };
                let Target::Class(y) = s.target else { unreachable!() };
                let (la, lb) = (ra.last().ok_or_else(|| mismatch("a"))?, rb.last().ok_or_else(|| mismatch("b"))?);
                if la.len() != d.outputs || lb.len() != d.outputs {
                    return Err(mismatch("class count"));
                }
                loss.0 += -arn_core::tensor::tape::log_softmax_at(la, y);
                loss.1 += -arn_core::tensor::tape::log_softmax_at(lb, y);
                let ca = model::argmax(la) == y;
                let cb = model::argmax(lb) == y;
                hits_a += u64::from(ca);
                hits_b += u64::from(cb);
                b_only += u64::from(ca && !cb);
                c_only += u64::from(cb && !ca);
                n += 1;
            }
            if n == 0 {
                return Err(Failure::Data("no series shared by both prediction files and the targets".into()));
            }
            let t = stats::mcnemar(b_only, c_only);
            let (ca, cb) = (loss.0 / n as f64, loss.1 / n as f64);
            println!("examples,cce_a,cce_b,factor_better,accuracy_a,accuracy_b,test,statistic,p_value");
            println!(
                "{n},{ca:.6},{cb:.6},{:.4},{:.6},{:.6},mcnemar,{:.6},{:.6}",
                ca / cb,
                hits_a as f64 / n as f64,
                hits_b as f64 / n as f64,
                t.chi2,
                t.p_value
            );
        }
        TaskArg::Reg => {
            if d.task != Task::Regression {
                return Err(mismatch("task"));
            }
            let mut diffs = Vec::new();
            for s in &d.series {
                let (Some(ra), Some(rb)) = (lookup(&pa, s), lookup(&pb, s)) else { continue };
                let Target::Values(v) = &s.target else { unreachable!() };
                if ra.len() != v.rows() || rb.len() != v.rows() {
                    return Err(mismatch("series length"));
                }
                let se = |rows: &[Vec<f64>]| -> Result<f64, Failure> {
                    let mut acc = 0.0;
                    for (t, r) in rows.iter().enumerate() {
                        if r.len() != v.cols() {
                            return Err(mismatch("target width"));
                        }
                        acc += r.iter().zip(v.row(t)).map(|(p, y)| (p - y) * (p - y)).sum::<f64>();
                    }
                    Ok(acc / v.len() as f64)
                };
                let (ea, eb) = (se(&ra)?, se(&rb)?);
                loss.0 += ea;
                loss.1 += eb;
                diffs.push(ea - eb);
                n += 1;
            }
            if n == 0 {
                return Err(Failure::Data("no series shared by both prediction files and the targets".into()));
            }
            let w = stats::wilcoxon_signed_rank(&diffs);
            let (ma, mb) = (loss.0 / n as f64, loss.1 / n as f64);
            println!("examples,mse_a,mse_b,factor_better,test,statistic,p_value");
            println!("{n},{ma:.6},{mb:.6},{:.4},wilcoxon,{:.1},{:.6}", ma / mb, w.w_minus, w.p_value);
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn search(
    data_path: &Path,
    budget: usize,
    seed: u64,
    neuron: &str,
    nodes: usize,
    examples: usize,
    config: Option<&Path>,
    space: Option<&Path>,
    out: &Path,
) -> Result<(), Failure> {
    let program = load_neuron(neuron)?;
    let mut base = load_config(config)?;
    base.seed = seed;
    let space = match space {
        Some(p) => toml::from_str::<SearchSpace>(&files::read_text(p)?).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
        None => SearchSpace::default(),
    };
    let raw = load_dataset(data_path)?;
    let prep = prepare(&raw, seed)?;
    let net_cfg = NetworkConfig { nodes, inputs: raw.inputs, outputs: raw.outputs, task: raw.task };
    net_cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let tr = prep.data.refs(&prep.splits.train);
    let va = prep.data.refs(&prep.splits.validation);
    let result = trainer::random_search(&space, &base, budget, seed, |i, c| {
        let mut c = *c;
        let b = c.batch_size;
        let frac = c.schedule.decay_steps as f64 / c.updates() as f64;
        c.total_examples = (examples / b).max(1) * b;
        c.checkpoint_every = (c.checkpoint_every.min(c.total_examples) / b).max(1) * b;
        c.schedule.decay_steps = (frac * c.updates() as f64).round() as usize;
        c.seed = arn_core::rng::derive_seed(seed, i as u64);
        let Ok(mut net) = Network::new(&program, net_cfg, c.seed, &InitOptions::default()) else { return f64::INFINITY };
        trainer::train(&mut net, &tr, &va, &c).map_or(f64::INFINITY, |r| r.score())
    })
    .map_err(|e| Failure::Data(e.to_string()))?;
    if !result.scores[result.best_index].is_finite() {
        return Err(Failure::Numeric("every sampled configuration diverged".into()));
    }
    let mut best = result.best;
    best.seed = seed;
    files::write_text(out, &format!("{CONFIG_HEADER}{}", best.to_toml()))?;
    println!("best_index = {}", result.best_index);
    println!("best_val_loss = {:?}", result.scores[result.best_index]);
    Ok(())
}
