use std::path::Path;

use shapecodes::eval::{
    evaluate_reconstruction, fit_avg_predictor, per_view_mse_heatmap, random_weights_net, recognition_table, recon_rows, AvgKind, FeatureSource,
    KnnProtocol, ResultTable,
};
use shapecodes::kv::join_list;
use shapecodes::ndtensor::{grad_check, GradCheckConfig, LayerKind, LayerObjective};
use shapecodes::net::{train_with_progress, Checkpoint, FeatureLayer, NetConfig, NetObjective, TrainConfig, Variant};
use shapecodes::shapeforge::{generate_dataset, Dataset, DatasetConfig, Family, RenderConfig, Split};
use shapecodes::viewgrid::{azimuth_shift, montage, sample_view_sphere, ViewIndex};
use shapecodes::Net32;

use crate::resolve::{data_err, parse_elevations, parse_list, with_suffix, write_file, write_manifest, CliError, CliResult, Resolved};
use crate::{EvalKnnArgs, EvalReconArgs, ExportArgs, GenArgs, GradcheckArgs, HeatmapArgs, TrainArgs};

fn load_dataset(path: &Path) -> CliResult<Dataset> {
    Dataset::read(path).map_err(|e| data_err(&format!("dataset {}", path.display()), e))
}

fn load_net(path: &Path) -> CliResult<Net32> {
    let ck = Checkpoint::read(path).map_err(|e| data_err(&format!("checkpoint {}", path.display()), e))?;
    ck.to_net().map_err(|e| data_err(&format!("checkpoint {}", path.display()), e))
}

fn ensure_matches(net: &Net32, ds: &Dataset) -> CliResult<()> {
    let spec = net.config().spec()?;
    if spec != ds.spec || net.config().image_size != ds.image_size {
        return Err(CliError::Data(format!(
            "checkpoint grid {}x{} at {}px does not match dataset grid {}x{} at {}px",
            spec.num_elevations(),
            spec.num_azimuths(),
            net.config().image_size,
            ds.spec.num_elevations(),
            ds.spec.num_azimuths(),
            ds.image_size
        )));
    }
    Ok(())
}

fn emit(table: &ResultTable, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, table.to_tsv().as_bytes()),
        None => {
            print!("{}", table.to_tsv());
            Ok(())
        }
    }
}

const GEN_KEYS: &[&str] = &["seed", "classes", "unseen", "per_class", "azimuths", "elevations", "image_size"];

pub fn gen(a: GenArgs) -> CliResult<()> {
    let mut r = Resolved::load(a.common.config.as_deref(), GEN_KEYS)?;
    let seed = r.get("seed", a.common.seed, 0)?;
    let classes = r.get("classes", a.classes, 10)?;
    let unseen = r.get("unseen", a.unseen, 0)?;
    let per_class = r.get("per_class", a.per_class, 100)?;
    let azimuths = r.get("azimuths", a.azimuths, 12)?;
    let elevations = parse_elevations(&r.get("elevations", a.elevations, "0,±30,±60,±90".to_string())?)?;
    let image_size = r.get("image_size", a.image_size, 32)?;
    if classes > Family::ALL.len() {
        return Err(CliError::Usage(format!("--classes {classes}: only {} shape families exist", Family::ALL.len())));
    }
    let cfg = DatasetConfig::first(classes, unseen, per_class)?;
    let spec = sample_view_sphere(azimuths, &elevations)?;
    let render = RenderConfig { image_size, ..RenderConfig::default() };
    let ds = generate_dataset(&cfg, &spec, &render, seed)?;
    ds.write(&a.out).map_err(|e| data_err(&format!("writing {}", a.out.display()), e))?;
    write_manifest(&a.out, "gen", &r.values, &[], &[&a.out])?;
    eprintln!("wrote {} objects × {} views to {}", ds.objects.len(), spec.num_views(), a.out.display());
    Ok(())
}

const TRAIN_KEYS: &[&str] = &["seed", "variant", "lr_grid", "max_epochs", "patience", "batch_size", "momentum"];

pub fn train(a: TrainArgs) -> CliResult<()> {
    let mut r = Resolved::load(a.common.config.as_deref(), TRAIN_KEYS)?;
    let ds = load_dataset(&a.data)?;
    let d = TrainConfig::default();
    let variant = Variant::from_name(&r.get("variant", a.variant, "ours".to_string())?)?;
    let mut cfg = TrainConfig {
        seed: r.get("seed", a.common.seed, 0)?,
        lr_grid: parse_list(&r.get("lr_grid", a.lr_grid, join_list(&d.lr_grid))?, "learning rate")?,
        max_epochs: r.get("max_epochs", a.max_epochs, d.max_epochs)?,
        patience: r.get("patience", a.patience, d.patience)?,
        ..d
    };
    cfg.optimizer.batch_size = r.get("batch_size", a.batch_size, cfg.optimizer.batch_size)?;
    cfg.optimizer.momentum = r.get("momentum", a.momentum, cfg.optimizer.momentum)?;
    let net_cfg = NetConfig { image_size: ds.image_size, ..NetConfig::new(&ds.spec, variant) };
    let outcome = train_with_progress::<f32>(&ds, &net_cfg, &cfg, &mut |row| {
        eprintln!("lr {}\tepoch {}\tstep {}\ttrain {:.6}\tval {:.6}{}", row.lr, row.epoch, row.step, row.train_loss, row.val_loss, if row.best { "\t*" } else { "" });
    })?;
    let mut meta = cfg.to_kv();
    meta.set("seed", cfg.seed);
    meta.set("dataset_sha256", ds.hash());
    meta.set("selected_lr", outcome.learning_rate);
    meta.set("val_loss", outcome.val_loss);
    let ck = Checkpoint::from_net(&outcome.net, &meta);
    ck.write(&a.out).map_err(|e| data_err(&format!("writing {}", a.out.display()), e))?;
    let log = a.log.unwrap_or_else(|| with_suffix(&a.out, ".log.tsv"));
    write_file(&log, outcome.log.to_tsv().as_bytes())?;
    write_manifest(&a.out, "train", &r.values, &[("data", &a.data)], &[&a.out, &log])?;
    eprintln!("selected lr {} (val loss {}); checkpoint {}", outcome.learning_rate, outcome.val_loss, a.out.display());
    Ok(())
}

fn default_splits(ds: &Dataset) -> Vec<Split> {
    [Split::Test, Split::UnseenTest].into_iter().filter(|&s| ds.count(s) > 0).collect()
}

fn parse_splits(s: &str) -> CliResult<Vec<Split>> {
    s.split(',').map(str::trim).map(|p| Split::from_name(p).ok_or_else(|| CliError::Usage(format!("unknown split '{p}'")))).collect()
}

const RECON_KEYS: &[&str] = &["baselines", "splits"];

pub fn eval_recon(a: EvalReconArgs) -> CliResult<()> {
    let mut r = Resolved::load(a.common.config.as_deref(), RECON_KEYS)?;
    let ds = load_dataset(&a.data)?;
    let baselines = r.get("baselines", a.baselines, "all".to_string())?;
    let kinds: Vec<AvgKind> = match baselines.as_str() {
        "all" => AvgKind::ALL.to_vec(),
        "none" => vec![],
        s => s.split(',').map(|k| AvgKind::from_name(k.trim())).collect::<Result<_, _>>()?,
    };
    let splits = match r.get_opt("splits", a.splits) {
        Some(s) => parse_splits(&s)?,
        None => default_splits(&ds),
    };
    let net = a.checkpoint.as_deref().map(load_net).transpose()?;
    if let Some(net) = &net {
        ensure_matches(net, &ds)?;
        if net.config().variant == Variant::Autoencoder {
            return Err(CliError::Usage("the autoencoder does not predict viewgrids".into()));
        }
    }
    if net.is_none() && kinds.is_empty() {
        return Err(CliError::Usage("nothing to evaluate: give --checkpoint or baselines".into()));
    }
    let train = ds.indices(Split::Train);
    let predictors = kinds.iter().map(|&k| fit_avg_predictor(&ds, &train, k)).collect::<Result<Vec<_>, _>>()?;
    let mut table = ResultTable::default();
    for split in splits {
        if let Some(net) = &net {
            if let Some(res) = evaluate_reconstruction(net, &ds, split)? {
                recon_rows(&mut table, &ds, &res);
            }
        }
        for p in &predictors {
            if let Some(res) = evaluate_reconstruction(p, &ds, split)? {
                recon_rows(&mut table, &ds, &res);
            }
        }
    }
    emit(&table, a.out.as_deref())?;
    if let Some(out) = &a.out {
        let mut inputs: Vec<(&str, &Path)> = vec![("data", &a.data)];
        if let Some(c) = &a.checkpoint {
            inputs.push(("checkpoint", c));
        }
        write_manifest(out, "eval-recon", &r.values, &inputs, &[out])?;
    }
    Ok(())
}

const KNN_KEYS: &[&str] = &["seed", "methods", "layer", "k", "per_class", "seeds", "classes"];

pub fn eval_knn(a: EvalKnnArgs) -> CliResult<()> {
    let mut r = Resolved::load(a.common.config.as_deref(), KNN_KEYS)?;
    let ds = load_dataset(&a.data)?;
    let seed = r.get("seed", a.common.seed, 0)?;
    let k = r.get("k", a.k, 5)?;
    let per_class = r.get("per_class", a.per_class, 1000)?;
    let seeds = r.get("seeds", a.seeds, 1)?;
    let layer = match r.get("layer", a.layer, "auto".to_string())?.as_str() {
        "auto" => None,
        l => Some(FeatureLayer::from_name(l)?),
    };
    let ours = a.checkpoint.as_deref().map(load_net).transpose()?;
    let ae = a.autoencoder.as_deref().map(load_net).transpose()?;
    let default_methods = {
        let mut m = vec!["pixels", "random"];
        if ours.is_some() {
            m.insert(0, "ours");
        }
        if ae.is_some() {
            m.push("autoencoder");
        }
        m.join(",")
    };
    let methods: Vec<String> = r.get("methods", a.methods, default_methods)?.split(',').map(|s| s.trim().to_string()).collect();
    let classes = r.get("classes", a.classes, "both".to_string())?;
    let which: Vec<bool> = match classes.as_str() {
        "seen" => vec![false],
        "unseen" => vec![true],
        "both" => [false, true].into_iter().filter(|&u| ds.count(if u { Split::UnseenTest } else { Split::Test }) > 0).collect(),
        other => return Err(CliError::Usage(format!("--classes must be seen, unseen or both, got '{other}'"))),
    };
    for net in ours.iter().chain(&ae) {
        ensure_matches(net, &ds)?;
    }
    let random_cfg = match &ours {
        Some(n) => n.config().clone(),
        None => NetConfig { image_size: ds.image_size, ..NetConfig::new(&ds.spec, Variant::Relative) },
    };
    let random = random_weights_net(random_cfg, seed)?;
    let mut sources = Vec::new();
    for m in &methods {
        sources.push(match m.as_str() {
            "pixels" => FeatureSource::Pixels,
            "random" => FeatureSource::Network { method: "random", net: &random },
            "ours" => FeatureSource::Network { method: "ours", net: ours.as_ref().ok_or_else(|| CliError::Usage("method 'ours' needs --checkpoint".into()))? },
            "autoencoder" => {
                FeatureSource::Network { method: "autoencoder", net: ae.as_ref().ok_or_else(|| CliError::Usage("method 'autoencoder' needs --autoencoder".into()))? }
            }
            other => return Err(CliError::Usage(format!("unknown method '{other}'"))),
        });
    }
    let protocol = KnnProtocol { k, per_class, seeds: (0..seeds as u64).map(|i| seed + i).collect(), layer };
    let mut table = ResultTable::default();
    for unseen in which {
        table.rows.extend(recognition_table(&ds, &sources, unseen, &protocol)?.rows);
    }
    emit(&table, a.out.as_deref())?;
    if let Some(out) = &a.out {
        let mut inputs: Vec<(&str, &Path)> = vec![("data", &a.data)];
        if let Some(c) = &a.checkpoint {
            inputs.push(("checkpoint", c));
        }
        if let Some(c) = &a.autoencoder {
            inputs.push(("autoencoder", c));
        }
        write_manifest(out, "eval-knn", &r.values, &inputs, &[out])?;
    }
    Ok(())
}

pub fn export(a: ExportArgs) -> CliResult<()> {
    let r = Resolved::load(a.common.config.as_deref(), &[])?;
    let ds = load_dataset(&a.data)?;
    let net = load_net(&a.checkpoint)?;
    ensure_matches(&net, &ds)?;
    if a.object >= ds.objects.len() {
        return Err(CliError::Usage(format!("object {} out of range (dataset has {})", a.object, ds.objects.len())));
    }
    let rc: Vec<usize> = parse_list(&a.view, "view coordinate")?;
    let view = match rc.as_slice() {
        [row, col] => ViewIndex { elev_row: *row, azim_col: *col },
        _ => return Err(CliError::Usage(format!("--view expects row,col, got '{}'", a.view))),
    };
    ds.spec.check(view)?;
    let gt = ds.viewgrid::<f64>(a.object);
    let pred = net.predict_viewgrid(&ds.view::<f32>(a.object, view), ds.spec.elevation_degrees(view.elev_row))?;
    let mut pred = pred.cast::<f64>();
    // Back to the dataset's azimuth axes so tiles line up with the ground truth.
    if net.config().variant == Variant::Relative {
        pred = azimuth_shift(&pred, -(view.azim_col as i64));
    }
    let img = montage(&[&gt, &pred])?;
    img.write(&a.out).map_err(|e| data_err(&format!("writing {}", a.out.display()), e))?;
    let mut settings = r.values;
    settings.set("object", a.object);
    settings.set("class", ds.class_name(ds.objects[a.object].class_id));
    settings.set("observed_view", format!("{},{}", view.elev_row, view.azim_col));
    settings.set("observed_elevation", ds.spec.elevation_degrees(view.elev_row));
    settings.set("observed_azimuth", ds.spec.azimuth_degrees(view.azim_col));
    settings.set("layout", "top=ground truth, bottom=prediction, both in dataset azimuth axes");
    write_manifest(&a.out, "export", &settings, &[("data", &a.data), ("checkpoint", &a.checkpoint)], &[&a.out])
}

pub fn heatmap(a: HeatmapArgs) -> CliResult<()> {
    let r = Resolved::load(a.common.config.as_deref(), &[])?;
    let ds = load_dataset(&a.data)?;
    let net = load_net(&a.checkpoint)?;
    ensure_matches(&net, &ds)?;
    let class_id = match a.class.parse::<u16>() {
        Ok(id) if (id as usize) < ds.classes.len() => id,
        _ => ds.classes.iter().position(|c| c.name == a.class).ok_or_else(|| CliError::Usage(format!("unknown class '{}'", a.class)))? as u16,
    };
    let split = Split::from_name(&a.split).ok_or_else(|| CliError::Usage(format!("unknown split '{}'", a.split)))?;
    let objects: Vec<usize> = ds.indices(split).into_iter().filter(|&o| ds.objects[o].class_id == class_id).collect();
    if objects.is_empty() {
        return Err(CliError::Data(format!("no {} instances of class '{}'", split.name(), a.class)));
    }
    let hm = per_view_mse_heatmap(&net, &ds, &objects)?;
    let pgm = with_suffix(&a.out, ".pgm");
    let txt = with_suffix(&a.out, ".txt");
    hm.to_image(16).write(&pgm).map_err(|e| data_err(&format!("writing {}", pgm.display()), e))?;
    write_file(&txt, hm.to_text().as_bytes())?;
    let mut settings = r.values;
    settings.set("class", ds.class_name(class_id));
    settings.set("split", split.name());
    settings.set("instances", objects.len());
    write_manifest(&txt, "heatmap", &settings, &[("data", &a.data), ("checkpoint", &a.checkpoint)], &[&pgm, &txt])
}

pub fn gradcheck(a: GradcheckArgs) -> CliResult<()> {
    let mut r = Resolved::load(a.common.config.as_deref(), &["seed"])?;
    let seed = r.get("seed", a.common.seed, 0)?;
    let cfg = GradCheckConfig::default();
    let mut failed = 0;
    println!("check\tinstances\tchecked\tskipped\tmax_rel_error\tresult");
    let mut line = |name: &str, reports: Vec<shapecodes::ndtensor::GradCheckReport>| {
        let worst = reports.iter().map(|r| r.max_rel_error()).fold(0.0, f64::max);
        let ok = reports.iter().all(|r| r.passed());
        let checked: usize = reports.iter().map(|r| r.checked()).sum();
        let skipped: usize = reports.iter().flat_map(|r| &r.tensors).map(|t| t.skipped).sum();
        println!("{name}\t{}\t{checked}\t{skipped}\t{worst:.3e}\t{}", reports.len(), if ok { "pass" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    };
    for (name, kind) in LayerKind::all() {
        let reports = (0..a.instances).map(|i| grad_check(&mut LayerObjective::random(kind, seed, i), &cfg)).collect::<Result<Vec<_>, _>>()?;
        line(name, reports);
    }
    for variant in Variant::ALL {
        let mut reports = Vec::new();
        for i in 0..a.instances {
            reports.push(grad_check(&mut NetObjective::random(variant, seed, i)?, &cfg)?);
        }
        line(&format!("network_{}", variant.name()), reports);
    }
    if failed > 0 {
        return Err(CliError::Numeric(format!("{failed} gradient checks exceeded relative error {}", cfg.tolerance)));
    }
    Ok(())
}
