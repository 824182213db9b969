use pivalue::io::{bundled_sglt2i, fit_trial, from_json_str, to_json_string, Envelope, FitOutput, PlotTable, RunConfig};
use proptest::prelude::*;

#[test]
fn bundled_data_matches_the_trial_summaries() {
    let recs = bundled_sglt2i();
    assert_eq!(recs.len(), 8);
    // study, outcome, events and arm size per arm (treated, placebo), rates per 1000 PY
    let table = [
        ("CREDENCE", "primary", [(245, 2202), (340, 2199)], Some([43.2, 61.2]), 1),
        ("CREDENCE", "dka", [(11, 2200), (1, 2197)], Some([2.2, 0.2]), 1),
        ("DAPA-CKD", "primary", [(197, 2152), (312, 2152)], Some([46.0, 75.0]), 0),
        ("DAPA-CKD", "dka", [(0, 2149), (2, 2149)], None, 0),
    ];
    for (study, outcome, arms, rates, digits) in table {
        for (k, treat) in [1u8, 0].into_iter().enumerate() {
            let r = recs.iter().find(|r| r.study == study && r.outcome == outcome && r.treat == treat).unwrap();
            assert_eq!((r.events, r.arm_size), (arms[k].0, Some(arms[k].1)), "{study}/{outcome}/{treat}");
            match rates {
                Some(rt) => {
                    let rate = 1000.0 * r.events as f64 / r.exposure.unwrap();
                    let scale = 10f64.powi(digits);
                    assert_eq!((rate * scale).round() / scale, rt[k], "{study}/{outcome}/{treat}: {rate}");
                }
                None => assert!(r.exposure.is_none()),
            }
        }
    }
}

#[test]
fn fit_output_survives_a_json_round_trip() {
    let (_, _, out) = fit_trial(&bundled_sglt2i(), "CREDENCE", "primary", 1000.0).unwrap();
    let env = Envelope::new("fit", 7, out);
    let s = to_json_string(&env).unwrap();
    let back: Envelope<FitOutput> = from_json_str(&s).unwrap();
    assert_eq!(to_json_string(&back).unwrap(), s);
    assert_eq!(to_json_string(&env).unwrap(), s);
}

#[test]
fn config_rejects_unknown_keys() {
    assert!(RunConfig::from_toml_str("seed = 3\n").is_ok());
    assert!(RunConfig::from_toml_str("seed = 3\nsede = 4\n").is_err());
    assert!(RunConfig::from_toml_str("[model]\nfamily = \"poisson\"\nlnk = \"log\"\n").is_err());
}

proptest! {
    #[test]
    fn floats_round_trip_through_json(v in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let s = to_json_string(&vec![v]).unwrap();
        let back: Vec<f64> = from_json_str(&s).unwrap();
        prop_assert_eq!(back[0].to_bits(), v.to_bits());
    }

    #[test]
    fn plot_tables_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e300f64..1e300, 3), 0..20)) {
        let mut t = PlotTable::new(&["a", "b", "c"]);
        for r in &rows {
            t.push(r.clone());
        }
        let back = PlotTable::from_csv_str(&t.to_csv_string().unwrap()).unwrap();
        prop_assert_eq!(back, t);
    }
}
