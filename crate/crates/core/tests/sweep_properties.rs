use proptest::prelude::*;

use optomech::model::ModelOptions;
use optomech::params::{ParamName, PhysicalParams};
use optomech::sweep::{run_sweep, Axis, Family, SweepSpec};

fn payload(csv: &str) -> String {
    csv.lines()
        .filter(|l| !l.starts_with("# timestamp_unix:"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn spec(t: f64, r: f64, lam_end: f64, beta: f64, points: usize) -> SweepSpec {
    let mut base = PhysicalParams::experimental();
    base.set_display(ParamName::Temperature, t);
    base.squeezing = r;
    base.set_display(ParamName::Hopping, 0.0015);
    SweepSpec {
        label: None,
        base,
        axes: vec![Axis::new(ParamName::Gain, 0.0, lam_end, points)],
        family: Some(Family {
            name: ParamName::Tunneling,
            values: vec![beta, 10.0 * beta],
        }),
        options: ModelOptions::default(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn serial_and_concurrent_sweeps_are_identical(
        t in 0.0f64..0.05, r in 0.0f64..2.5, lam_end in 0.1f64..0.4, beta in 0.0f64..0.002, points in 2usize..12,
    ) {
        let s = spec(t, r, lam_end, beta, points);
        let a = run_sweep(&s, Some(1)).unwrap();
        let b = run_sweep(&s, Some(3)).unwrap();
        prop_assert_eq!(&a.records, &b.records);
        prop_assert_eq!(payload(&a.to_csv_string().unwrap()), payload(&b.to_csv_string().unwrap()));
        prop_assert_eq!(a.records.len(), 2 * points);
    }

    #[test]
    fn sweep_records_are_physical(
        t in 0.0f64..0.05, r in 0.0f64..2.5, lam_end in 0.1f64..0.4, beta in 0.0f64..0.002,
    ) {
        let res = run_sweep(&spec(t, r, lam_end, beta, 8), None).unwrap();
        for rec in &res.records {
            prop_assert!(rec.error.is_none(), "{:?}", rec.error);
            match rec.log_negativity {
                None => prop_assert!(!rec.stable),
                Some(e) => {
                    prop_assert!(rec.stable);
                    prop_assert!(e >= 0.0);
                    prop_assert!(rec.min_symplectic.unwrap() >= 0.5 - 1e-9);
                    prop_assert!(rec.residual.unwrap() <= 1e-10);
                    if e > 0.0 {
                        prop_assert!(rec.det_z.unwrap() < 0.0);
                    }
                }
            }
        }
    }
}
