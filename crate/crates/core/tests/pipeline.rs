use pubshare::blocking::sigma_core_check;
use pubshare::catalog;
use pubshare::harness::{equivalence_report, Certificate, Verdict};
use pubshare::io::{load_allocation, load_economy};
use std::path::PathBuf;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data").join(name)
}

#[test]
fn data_files_match_the_catalog() {
    for (file, (econ, scheme)) in [("e2_agree.json", catalog::agree()), ("e2_opposing.json", catalog::opposing()), ("e2_mild.json", catalog::mild())] {
        let (loaded, s) = load_economy(&data(file)).unwrap();
        assert_eq!(loaded.utilities(), econ.utilities(), "{file}");
        assert_eq!(loaded.endowments(), econ.endowments());
        assert_eq!((0..2).map(|z| loaded.cost(z).to_vec()).collect::<Vec<_>>(), (0..2).map(|z| econ.cost(z).to_vec()).collect::<Vec<_>>());
        assert_eq!(s, scheme);
    }
}

#[test]
fn lopsided_report_ships_revalidated_certificates() {
    let (econ, scheme) = load_economy(&data("e2_agree.json")).unwrap();
    let alloc = load_allocation(&data("e2_agree_lopsided.json"), &econ).unwrap();
    let r = equivalence_report(&econ, &scheme, &alloc).unwrap();
    let v = &r.verdicts;
    for verdict in [&v.competitive_equilibrium, &v.sigma_aubin_core, &v.aubin_non_dominated, &v.sigma_edgeworth, &v.not_z_dominated] {
        assert!(matches!(verdict, Verdict::False { revalidated: true, .. }), "{verdict:?}");
    }
    assert!(r.escalation.is_none());
}

#[test]
fn fractional_allocation_separates_core_from_aubin_core() {
    let (econ, scheme) = load_economy(&data("e2_agree.json")).unwrap();
    let alloc = load_allocation(&data("e2_agree_fractional.json"), &econ).unwrap();
    assert!(sigma_core_check(&econ, &scheme, &alloc).unwrap().in_core);
    let r = equivalence_report(&econ, &scheme, &alloc).unwrap();
    assert!(r.preconditions.all_met);
    match &r.verdicts.sigma_aubin_core {
        Verdict::False { certificate: Certificate::Blocking { witness }, revalidated: true } => {
            assert!(witness.r >= 2);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(r.verdicts.competitive_equilibrium.as_bool(), Some(false));
    assert_eq!(r.verdicts.sigma_edgeworth.as_bool(), Some(false));
    assert!(r.escalation.is_none());
}

#[test]
fn one_sided_verdicts_carry_bounds() {
    let (econ, scheme) = catalog::agree();
    let r = equivalence_report(&econ, &scheme, &catalog::agree_equilibrium()).unwrap();
    for verdict in [&r.verdicts.sigma_aubin_core, &r.verdicts.sigma_edgeworth, &r.verdicts.not_z_dominated] {
        assert!(matches!(verdict, Verdict::True { bound: Some(_) }), "{verdict:?}");
    }
    assert_eq!((r.bounds.r_max, r.bounds.alpha_grid), (8, 8));
}
