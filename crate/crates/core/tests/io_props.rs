mod common;

use common::{random_model, rng, with_random_feedthrough};
use lpvssa::io::{
    model_to_json, parse_model, parse_model_document, parse_signals, read_hankel_dump, write_hankel_dump, Signals,
    ThetaTable,
};
use lpvssa::linalg::max_abs;
use lpvssa::{build_hankel, ModelOracle, TimeDomain};
use proptest::prelude::*;

#[test]
fn model_file_roundtrip_is_exact() {
    let mut g = rng(70);
    for td in [TimeDomain::Discrete, TimeDomain::Continuous] {
        let (m, x0) = random_model(&mut g, 2, 3, 2, 1, td);
        let m = with_random_feedthrough(&mut g, m);
        let (back, back_x0) = parse_model(&model_to_json(&m, Some(&x0))).unwrap();
        assert_eq!(back, m);
        assert_eq!(back_x0.unwrap(), x0);
    }
}

#[test]
fn theta_table_roundtrip() {
    let mut g = rng(71);
    let (m, x0) = random_model(&mut g, 1, 2, 2, 2, TimeDomain::Discrete);
    let table = ThetaTable::from_oracle(&ModelOracle::new(&m, &x0), 3).unwrap();
    let back = ThetaTable::parse(&table.to_json()).unwrap();
    assert_eq!(back, table);
    let h1 = build_hankel(&back, 1, 2).unwrap();
    let h2 = build_hankel(&ModelOracle::new(&m, &x0), 1, 2).unwrap();
    assert_eq!(h1.matrix, h2.matrix);
}

#[test]
fn theta_table_rejects_inconsistent_headers() {
    let missing = r#"{"np":1,"ny":1,"nu":0,"max_len":1,"records":[{"word":"eps","theta":[1,2,3,4]}]}"#;
    assert!(ThetaTable::parse(missing).is_err());
    let wrong_size = r#"{"np":0,"ny":1,"nu":0,"max_len":0,"records":[{"word":"eps","theta":[1,2]}]}"#;
    assert!(ThetaTable::parse(wrong_size).is_err());
    let too_long = r#"{"np":0,"ny":1,"nu":0,"max_len":0,"records":[{"word":"0","theta":[1]}]}"#;
    assert!(ThetaTable::parse(too_long).is_err());
    let ok = r#"{"np":0,"ny":1,"nu":0,"max_len":0,"records":[{"word":"eps","theta":[1]}]}"#;
    assert_eq!(ThetaTable::parse(ok).unwrap().max_len(), 0);
}

#[test]
fn hankel_dump_roundtrip() {
    let mut g = rng(72);
    let (m, x0) = random_model(&mut g, 1, 2, 1, 2, TimeDomain::Discrete);
    let h = build_hankel(&ModelOracle::new(&m, &x0), 2, 1).unwrap();
    let bytes = write_hankel_dump(&h);
    assert_eq!(bytes.len(), 32 + 8 * h.matrix.len());
    let d = read_hankel_dump(&bytes).unwrap();
    assert_eq!((d.n, d.m), (2, 1));
    assert_eq!(max_abs(&(d.matrix - &h.matrix)), 0.0);
    assert!(read_hankel_dump(&bytes[..bytes.len() - 1]).is_err());
    assert!(read_hankel_dump(&bytes[..16]).is_err());
}

#[test]
fn signals_files() {
    let dt = r#"{"time_domain":"dt","u":[[1,2],[3,4]],"p":[[0.5],[0.25]]}"#;
    match parse_signals(dt).unwrap() {
        Signals::Discrete { u, p } => {
            assert_eq!(u.len(), 2);
            assert_eq!(p[1][0], 0.25);
        }
        other => panic!("unexpected {other:?}"),
    }
    let ct = r#"{"time_domain":"ct","times":[0,0.5,1.0],"u":[[1],[2],[3]],"p":[[0],[1],[0]]}"#;
    match parse_signals(ct).unwrap() {
        Signals::Continuous { u, p } => {
            assert_eq!(u.step(), 0.5);
            assert_eq!(p.at(0.25)[0], 0.5);
        }
        other => panic!("unexpected {other:?}"),
    }
    let uneven = r#"{"time_domain":"ct","times":[0,0.5,1.5],"u":[[1],[2],[3]],"p":[[0],[1],[0]]}"#;
    assert!(parse_signals(uneven).is_err());
    let ragged = r#"{"time_domain":"dt","u":[[1],[2,3]],"p":[[0],[1]]}"#;
    assert!(parse_signals(ragged).is_err());
}

#[test]
fn document_keeps_dimension_errors_for_validation() {
    let text = r#"{"np":0,"nx":2,"nu":1,"ny":1,"time_domain":"dt",
        "A":[[[1.0]]],"B":[[[1.0],[0.0]]],"C":[[[1.0,0.0]]]}"#;
    let doc = parse_model_document(text).unwrap();
    assert!(!lpvssa::model::validate(&doc.parts).errors.is_empty());
    assert!(parse_model(text).is_err());
}

proptest! {
    #[test]
    fn parsers_never_panic(text in ".{0,200}") {
        let _ = parse_model(&text);
        let _ = ThetaTable::parse(&text);
        let _ = parse_signals(&text);
    }

    #[test]
    fn dump_reader_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..128)) {
        let _ = read_hankel_dump(&bytes);
    }
}
