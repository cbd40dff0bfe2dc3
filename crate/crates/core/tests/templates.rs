//! The shipped templates, evaluated at the generator's true parameters,
//! must reproduce the generator's ground-truth equation term by term.

use std::collections::BTreeMap;
use std::path::Path;

use mechpde::datagen::{gen_burgers, gen_diffusion, gen_porous_medium, gen_reaction_diffusion, BurgersConfig, DiffusionConfig, PorousConfig, RdConfig};
use mechpde::discovery::PdeTemplate;

fn load(name: &str) -> PdeTemplate {
    PdeTemplate::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("templates").join(name)).unwrap()
}

fn nonzero(eq: BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    eq.into_iter().filter(|(_, v)| v.abs() > 1e-12).collect()
}

fn with(tpl: &PdeTemplate, set: &[(&str, f64)]) -> Vec<f64> {
    let mut p = vec![0.0; tpl.params.len()];
    for (name, v) in set {
        p[tpl.param_index(name).unwrap_or_else(|| panic!("no param {name}"))] = *v;
    }
    p
}

fn assert_terms(got: &BTreeMap<String, f64>, want: &BTreeMap<String, f64>) {
    assert_eq!(got.keys().collect::<Vec<_>>(), want.keys().collect::<Vec<_>>());
    for (k, v) in want {
        assert!((got[k] - v).abs() < 1e-12, "{k}: {} vs {v}", got[k]);
    }
}

#[test]
fn burgers_library_covers_diffusion_and_burgers() {
    let tpl = load("burgers.toml");
    let d = gen_diffusion(&DiffusionConfig { nt: 4, nx: 16, ..DiffusionConfig::default() }).unwrap();
    let eq = tpl.equation(&with(&tpl, &[("phi_0", -0.01)])).unwrap();
    assert_terms(&nonzero(eq), &d.truth);

    let b = gen_burgers(&BurgersConfig { nt: 4, nx: 16, ..BurgersConfig::default() }).unwrap();
    let eq = tpl.equation(&with(&tpl, &[("theta_1", 1.0), ("phi_0", -0.1)])).unwrap();
    assert_terms(&nonzero(eq), &b.truth);

    let denoise = load("burgers_denoise.toml");
    assert_eq!(denoise.params.len(), tpl.params.len());
}

#[test]
fn porous_template_matches_expanded_truth() {
    let tpl = load("porous.toml");
    assert_eq!(tpl.params.len(), 1);
    let d = gen_porous_medium(&PorousConfig { nt: 4, nx: 16, ..PorousConfig::default() }).unwrap();
    let m = d.truth_params["m"];
    let eq = nonzero(tpl.equation(&[m]).unwrap());
    assert_eq!(eq.len(), 2, "{eq:?}");
    if !d.truth.is_empty() {
        assert_terms(&eq, &d.truth);
    }
    let u_xx = eq.iter().find(|(k, _)| k.ends_with("u_xx")).unwrap();
    assert!((u_xx.1 - m).abs() < 1e-12);
}

#[test]
fn reaction_diffusion_template_matches_truth() {
    let tpl = load("reaction_diffusion.toml");
    let d = gen_reaction_diffusion(&RdConfig { nt: 2, n: 8, ..RdConfig::default() }).unwrap();
    // map every cubic monomial to its parameter by switching them on one at a time
    let mut by_label = BTreeMap::new();
    for (i, p) in tpl.params.iter().enumerate().filter(|(_, p)| p.name.starts_with("r_")) {
        let mut v = vec![0.0; tpl.params.len()];
        v[i] = 1.0;
        let eq = nonzero(tpl.equation(&v).unwrap());
        assert_eq!(eq.len(), 1);
        by_label.insert(eq.into_keys().next().unwrap(), p.name.clone());
    }
    assert_eq!(by_label.len(), 10);

    let mut set = vec![("dx_0", -d.truth["u_xx"]), ("dy_0", -d.truth["u_yy"])];
    for (k, v) in &d.truth {
        if let Some(name) = by_label.get(k) {
            set.push((name.as_str(), *v));
        }
    }
    assert_eq!(set.len(), d.truth.len());
    let eq = nonzero(tpl.equation(&with(&tpl, &set)).unwrap());
    assert_terms(&eq, &d.truth);
}
