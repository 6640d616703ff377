use std::io::Write;

use arn_core::data::{
    gen_double_pendulum, load_csv, load_snapshot, one_hot, pendulum_energy, preprocess, read_csv, save_snapshot,
    simulate_pendulum, split, write_csv, DataError, Dataset, PendulumParams, PendulumState, Target, DT_INTERNAL,
};
use arn_core::model::Task;
use arn_core::rng;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

const SMALL: &str = "series_id,t,x0,label
0,0,0.5,1
0,1,0.25,1
0,2,-1.0,1
1,0,2.0,0
1,1,3.0,0
1,2,4.0,0
";

#[test]
fn small_classification_file() {
    let d = read_csv(SMALL.as_bytes()).unwrap();
    assert_eq!((d.len(), d.timesteps(), d.inputs, d.outputs, d.task), (2, 3, 1, 2, Task::Classification));
    assert_eq!(d.series[0].inputs.data(), &[0.5, 0.25, -1.0]);
    assert_eq!(d.series[1].target, Target::Class(0));
}

#[test]
fn shuffled_rows_load_identically() {
    let mut lines: Vec<&str> = SMALL.lines().skip(1).collect();
    let mut r = rng::stream(1, 1);
    for _ in 0..5 {
        lines.shuffle(&mut r);
        let text = format!("# comment\nseries_id,t,x0,label\n{}\n", lines.join("\n"));
        assert_eq!(read_csv(text.as_bytes()).unwrap(), read_csv(SMALL.as_bytes()).unwrap());
    }
}

#[test]
fn fordb_shaped_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fordb.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path).unwrap());
    writeln!(f, "series_id,t,x0,label").unwrap();
    for s in 0..3836 {
        for t in 0..500 {
            writeln!(f, "{s},{t},{},{}", ((s * 7 + t) % 13) as f64 * 0.1, s % 2).unwrap();
        }
    }
    drop(f);
    let d = load_csv(&path).unwrap();
    assert_eq!((d.len(), d.timesteps(), d.inputs, d.outputs), (3836, 500, 1, 2));
}

#[test]
fn regression_round_trip() {
    let d = gen_double_pendulum(&PendulumParams { series: 3, steps: 5, dt_sample: 0.05, seed: 2 });
    let mut buf = Vec::new();
    write_csv(&d, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("# arn-csv 1\n"));
    assert_eq!(read_csv(text.as_bytes()).unwrap(), d);
}

#[test]
fn errors_name_the_line() {
    let bad = "series_id,t,x0,label\n0,0,1.0,0\n0,1,abc,0\n";
    match read_csv(bad.as_bytes()).unwrap_err() {
        DataError::NonNumeric { line, column, value } => assert_eq!((line, column.as_str(), value.as_str()), (3, "x0", "abc")),
        e => panic!("{e}"),
    }
    let short = "series_id,t,x0,label\n0,0,1.0,0\n0,1,2.0\n";
    assert!(matches!(read_csv(short.as_bytes()).unwrap_err(), DataError::Format { line: 3, .. }));
    let ragged = "series_id,t,x0,y0\n0,0,1,1\n0,1,1,1\n1,0,1,1\n";
    assert!(matches!(read_csv(ragged.as_bytes()).unwrap_err(), DataError::Ragged { .. }));
    let gap = "series_id,t,x0,y0\n0,0,1,1\n0,2,1,1\n";
    assert!(matches!(read_csv(gap.as_bytes()).unwrap_err(), DataError::Ragged { .. }));
    assert!(matches!(read_csv("id,t,x0,y0\n".as_bytes()).unwrap_err(), DataError::MissingColumn(_)));
    let relabel = "series_id,t,x0,label\n0,0,1,0\n0,1,1,1\n";
    assert!(matches!(read_csv(relabel.as_bytes()).unwrap_err(), DataError::Format { line: 3, .. }));
    let frac = "series_id,t,x0,label\n0,0,1,0.5\n";
    assert!(read_csv(frac.as_bytes()).is_err());
}

fn pendulum() -> Dataset {
    gen_double_pendulum(&PendulumParams { series: 40, steps: 16, dt_sample: 0.05, seed: 7 })
}

#[test]
fn preprocess_standardizes_training_split() {
    let d = pendulum();
    let s = split(d.len(), 1).unwrap();
    let (p, scaling) = preprocess(&d, &s.train);
    for c in 0..4 {
        let col = |tgt: bool| -> Vec<f64> {
            s.train
                .iter()
                .flat_map(|&i| {
                    let t = if tgt {
                        match &p.series[i].target {
                            Target::Values(v) => v.clone(),
                            Target::Class(_) => unreachable!(),
                        }
                    } else {
                        p.series[i].inputs.clone()
                    };
                    (0..t.rows()).map(move |r| t.get(r, c)).collect::<Vec<_>>()
                })
                .collect()
        };
        for v in [col(false), col(true)] {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let sd = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 1e-12, "{mean}");
            assert!((sd - 1.0).abs() < 1e-9, "{sd}");
        }
    }
    for (a, b) in d.series.iter().zip(&p.series) {
        let back = scaling.invert_inputs(&b.inputs);
        assert!(back.data().iter().zip(a.inputs.data()).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}

#[test]
fn constant_feature_is_only_centred() {
    let text = "series_id,t,x0,x1,y0\n0,0,3,1,0\n0,1,3,2,0\n1,0,3,3,1\n1,1,3,4,1\n";
    let d = read_csv(text.as_bytes()).unwrap();
    let (p, s) = preprocess(&d, &[0, 1]);
    assert_eq!(s.input_scale[0], 1.0);
    assert!(p.series.iter().all(|x| x.inputs.get(0, 0) == 0.0 && x.inputs.get(1, 0) == 0.0));
    assert_eq!(one_hot(1, 3), vec![0.0, 1.0, 0.0]);
}

proptest! {
    #[test]
    fn split_is_a_partition(n in 4usize..400, seed in any::<u64>()) {
        prop_assume!(n != 5);
        let s = split(n, seed).unwrap();
        prop_assert_eq!(s.train.len(), n.div_ceil(2));
        prop_assert_eq!(s.validation.len(), n.div_ceil(4));
        prop_assert!(!s.test.is_empty());
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(split(n, seed).unwrap(), s);
    }
}

#[test]
fn split_boundaries() {
    let s = split(8, 0).unwrap();
    assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (4, 2, 2));
    assert!(matches!(split(5, 0), Err(DataError::TooFewSeries(5))));
    assert!(split(3, 0).is_err());
}

#[test]
fn pendulum_rest_is_an_equilibrium() {
    let rest = PendulumState { theta1: 0.0, theta2: 0.0, omega1: 0.0, omega2: 0.0 };
    let end = simulate_pendulum(rest, 5.0, DT_INTERNAL);
    assert_eq!(end, rest);
    assert_eq!(rest.coordinates(), [0.0, -1.0, 0.0, -2.0]);
}

#[test]
fn pendulum_energy_is_conserved() {
    let mut r = rng::stream(3, 3);
    for _ in 0..3 {
        let s = PendulumState {
            theta1: r.random_range(-2.0..2.0),
            theta2: r.random_range(-2.0..2.0),
            omega1: r.random_range(-1.0..1.0),
            omega2: r.random_range(-1.0..1.0),
        };
        let e0 = pendulum_energy(&s);
        let coarse = pendulum_energy(&simulate_pendulum(s, 10.0, DT_INTERNAL));
        let fine = pendulum_energy(&simulate_pendulum(s, 10.0, DT_INTERNAL / 10.0));
        assert!(((coarse - e0) / e0).abs() < 1e-6, "drift {}", (coarse - e0) / e0);
        assert!(((coarse - fine) / fine).abs() < 1e-6);
    }
}

#[test]
fn pendulum_data_shape_and_determinism() {
    let p = PendulumParams { series: 4, steps: 10, dt_sample: 0.05, seed: 5 };
    let a = gen_double_pendulum(&p);
    assert_eq!(a, gen_double_pendulum(&p));
    assert_ne!(a, gen_double_pendulum(&PendulumParams { seed: 6, ..p }));
    assert_eq!((a.len(), a.timesteps(), a.inputs, a.outputs), (4, 10, 4, 4));
    for s in &a.series {
        let Target::Values(y) = &s.target else { panic!() };
        // targets are the next step's inputs
        for t in 0..9 {
            assert_eq!(y.row(t), s.inputs.row(t + 1));
        }
        // rods keep unit length
        for t in 0..10 {
            let x = s.inputs.row(t);
            assert!((x[0].hypot(x[1]) - 1.0).abs() < 1e-12);
            assert!(((x[2] - x[0]).hypot(x[3] - x[1]) - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn snapshot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = pendulum();
    let p = dir.path().join("d.bin");
    save_snapshot(&d, &p).unwrap();
    assert_eq!(load_snapshot(&p).unwrap(), d);
    let c = read_csv(SMALL.as_bytes()).unwrap();
    save_snapshot(&c, &p).unwrap();
    assert_eq!(load_snapshot(&p).unwrap(), c);
    std::fs::write(&p, b"NOPE").unwrap();
    assert!(load_snapshot(&p).is_err());
    let mut bytes = Vec::new();
    save_snapshot(&c, &p).unwrap();
    bytes.extend(std::fs::read(&p).unwrap());
    bytes.truncate(bytes.len() - 3);
    std::fs::write(&p, bytes).unwrap();
    assert!(load_snapshot(&p).is_err());
}
