use super::*;
use crate::ndtensor::{grad_check, GradCheckConfig, Tensor};
use crate::shapeforge::{generate_dataset, DatasetConfig, RenderConfig};
use crate::viewgrid::{azimuth_shift, sample_view_sphere, viewgrid_loss, ViewIndex, ViewSphereSpec};

fn image(h: usize, phase: f32) -> Tensor<f32> {
    Tensor::from_vec(&[1, 1, h, h], (0..h * h).map(|i| ((i as f32 * 0.37 + phase).sin() + 1.0) / 2.0).collect()).unwrap()
}

#[test]
fn default_shapes() {
    let spec = ViewSphereSpec::modelnet();
    let net = ShapeCodeNet::<f32>::new(NetConfig::new(&spec, Variant::Relative), 1).unwrap();
    let x = image(32, 0.0);
    let e = ShapeCodeNet::<f32>::elevation_input(&[30.0]);
    let f = net.encode(&x, &e).unwrap();
    assert_eq!(f.fc1.shape(), [1, 256]);
    assert_eq!(f.fc3.shape(), [1, 256]);
    let out = net.decode(&f.fc3).unwrap();
    assert_eq!(out.shape(), [1, 84, 32, 32]);
    assert!(out.data().iter().all(|&v| v > 0.0 && v < 1.0));
    assert_eq!(net.encode(&x, &e).unwrap().fc3, f.fc3);
    assert!(net.encode(&image(16, 0.0), &e).is_err());
}

#[test]
fn autoencoder_differs_only_in_last_layer() {
    let spec = ViewSphereSpec::modelnet();
    let ours = layer_shapes(&NetConfig::new(&spec, Variant::Relative));
    let ae = layer_shapes(&NetConfig::new(&spec, Variant::Autoencoder));
    assert_eq!(ours[..11], ae[..11]);
    assert_eq!(ours[11], (vec![64, 84, 4, 4], 84));
    assert_eq!(ae[11], (vec![64, 1, 4, 4], 1));
}

#[test]
fn features_ignore_true_elevation() {
    let spec = ViewSphereSpec::modelnet();
    let net = ShapeCodeNet::<f32>::new(NetConfig::new(&spec, Variant::Relative), 2).unwrap();
    let x = image(32, 1.0);
    let f = net.extract_features(&x).unwrap();
    let direct = net.encode(&x, &ShapeCodeNet::<f32>::elevation_input(&[0.0])).unwrap();
    assert_eq!(f.fc2, direct.fc2);
    let at60 = net.encode(&x, &ShapeCodeNet::<f32>::elevation_input(&[60.0])).unwrap();
    assert_ne!(at60.fc3, direct.fc3);
    assert!(FeatureLayer::from_name("fc9").is_err());
}

#[test]
fn prediction_is_one_forward_pass() {
    let spec = ViewSphereSpec::modelnet();
    let net = ShapeCodeNet::<f32>::new(NetConfig::new(&spec, Variant::Relative), 3).unwrap();
    let before = net.forward_passes();
    let vg = net.predict_viewgrid(image(32, 0.5).data(), -30.0).unwrap();
    assert_eq!(net.forward_passes() - before, 1);
    assert!(vg.in_unit_range());
    assert_eq!(vg.spec(), &spec);
}

#[test]
fn relative_loss_ignores_ground_truth_origin() {
    let spec = sample_view_sphere(4, &[0, 45]).unwrap();
    let obj = NetObjective::random(Variant::Relative, 5, 0).unwrap();
    let net = ShapeCodeNet::<f64>::new(NetConfig::miniature(&spec, Variant::Relative), 5).unwrap();
    let e = ShapeCodeNet::<f64>::elevation_input(&[45.0]);
    let x = Tensor::from_vec(&[1, 1, 8, 8], obj.images.item(0).to_vec()).unwrap();
    let pred = crate::viewgrid::Viewgrid::new(spec.clone(), 8, 8, net.infer(&x, &e).unwrap().into_data()).unwrap();
    let gt = crate::viewgrid::Viewgrid::new(spec.clone(), 8, 8, (0..8 * 64).map(|i| (i % 7) as f64 / 7.0).collect()).unwrap();
    for k in 0..4 {
        let observed = ViewIndex { elev_row: 1, azim_col: 1 };
        let shifted = ViewIndex { elev_row: 1, azim_col: (1 + 4 - k) % 4 };
        let a = viewgrid_loss(&pred, &gt, observed).unwrap();
        let b = viewgrid_loss(&pred, &azimuth_shift(&gt, k as i64), shifted).unwrap();
        assert_eq!(a.to_bits(), b.to_bits(), "k={k}");
    }
}

#[test]
fn end_to_end_gradients_match_finite_differences() {
    let cfg = GradCheckConfig::default();
    for variant in Variant::ALL {
        for instance in 0..3 {
            let mut obj = NetObjective::random(variant, 77, instance).unwrap();
            let report = grad_check(&mut obj, &cfg).unwrap();
            assert!(report.passed(), "{variant:?} #{instance}\n{}", report.to_table());
        }
    }
}

fn toy() -> crate::shapeforge::Dataset {
    let cfg = DatasetConfig { instances_per_class: 5, ..DatasetConfig::first(2, 0, 5).unwrap() };
    let spec = sample_view_sphere(4, &[0, 30]).unwrap();
    generate_dataset(&cfg, &spec, &RenderConfig { image_size: 16, ..RenderConfig::default() }, 4).unwrap()
}

fn toy_net(ds: &crate::shapeforge::Dataset, variant: Variant) -> NetConfig {
    NetConfig {
        image_size: 16,
        code_dim: 16,
        fc1_dim: 16,
        elev_dim: 4,
        conv_channels: [4, 8, 8],
        decoder_channels: [8, 8, 4],
        ..NetConfig::new(&ds.spec, variant)
    }
}

#[test]
fn training_reduces_loss() {
    let ds = toy();
    let mut net = ShapeCodeNet::<f32>::new(toy_net(&ds, Variant::Relative), 1).unwrap();
    let objects: Vec<usize> = (0..ds.objects.len()).collect();
    let all = validation_examples(&ds, &objects, 2, 0);
    let before = evaluate_loss(&net, &ds, &all, 8).unwrap();
    let opt = crate::ndtensor::OptimizerConfig { learning_rate: 0.1, momentum: 0.9, batch_size: 4 };
    let mut step = 0;
    'outer: for epoch in 0.. {
        for batch in epoch_examples(&ds, &objects, 0, epoch).chunks(4) {
            train_step(&mut net, &ds, batch, &opt).unwrap();
            step += 1;
            if step == 200 {
                break 'outer;
            }
        }
    }
    let after = evaluate_loss(&net, &ds, &all, 8).unwrap();
    assert!(after < before, "{after} !< {before}");
}

#[test]
fn train_is_deterministic_and_restores_best() {
    let ds = toy();
    let cfg = TrainConfig { lr_grid: vec![0.1, 0.01], max_epochs: 6, patience: 2, ..TrainConfig::default() };
    let net_cfg = toy_net(&ds, Variant::Relative);
    let a = train::<f32>(&ds, &net_cfg, &cfg).unwrap();
    let b = train::<f32>(&ds, &net_cfg, &cfg).unwrap();
    let meta = crate::kv::KvMap::new();
    assert_eq!(Checkpoint::from_net(&a.net, &meta).to_bytes(), Checkpoint::from_net(&b.net, &meta).to_bytes());
    assert_eq!(a.log, b.log);
    let sel = a.log.selected().unwrap();
    let min = a.log.rows.iter().filter(|r| r.lr == sel.lr).map(|r| r.val_loss).fold(f64::INFINITY, f64::min);
    assert_eq!(sel.val_loss, min);
    assert_eq!(a.val_loss, min);
    let val = validation_examples(&ds, &ds.indices(crate::shapeforge::Split::Val), cfg.val_views_per_object, cfg.seed);
    assert_eq!(evaluate_loss(&a.net, &ds, &val, 32).unwrap(), min);
}

#[test]
fn checkpoint_round_trip() {
    let spec = ViewSphereSpec::shapenet();
    let net = ShapeCodeNet::<f32>::new(NetConfig::miniature(&spec, Variant::Canonical), 9).unwrap();
    let mut meta = crate::kv::KvMap::new();
    meta.set("seed", 9);
    let ck = Checkpoint::from_net(&net, &meta);
    let bytes = ck.to_bytes();
    let back = Checkpoint::from_bytes(&bytes).unwrap();
    assert_eq!(back, ck);
    assert_eq!(back.to_bytes(), bytes);
    let net2 = back.to_net().unwrap();
    for (a, b) in net.layers().iter().zip(net2.layers()) {
        assert_eq!(a.weight, b.weight);
        assert_eq!(a.bias, b.bias);
    }
    assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 2]).is_err());
}
