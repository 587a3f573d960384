//! Deterministic invariant suite: one verdict per invariant.

use dudley::flow::{self, estimate_asymptotics, stable_leaf_point};
use dudley::lorentz::{self, boost, exp_alg, LorentzAlg, LorentzElem};
use dudley::minkowski::{light_split, q, MinkVec};
use dudley::poincare::{self, NormChoice, PoincareAlg, PoincareElem};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::Experiment;
use crate::report::Verdict;
use crate::CliError;

const SAMPLES: usize = 200;

fn frob(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn size(x: &PoincareAlg) -> f64 {
    x.to_coords().iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-s..s)).collect()
}

fn random_lorentz(d: usize, rng: &mut ChaCha8Rng) -> LorentzElem {
    let mut c = uniform(rng, d, 1.5);
    c.extend(uniform(rng, d * (d - 1) / 2, 3.0));
    exp_alg(&LorentzAlg::from_coords(d, &c).expect("length matches"))
}

fn random_elem(d: usize, rng: &mut ChaCha8Rng) -> PoincareElem {
    let xi = MinkVec::new(uniform(rng, d + 1, 2.0)).expect("length matches");
    PoincareElem::new(random_lorentz(d, rng), xi).expect("dimensions match")
}

fn random_alg(d: usize, rng: &mut ChaCha8Rng) -> PoincareAlg {
    PoincareAlg::from_coords(d, &uniform(rng, poincare::algebra_dim(d), 1.0)).expect("length matches")
}

fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let v = uniform(rng, d, 1.0);
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn worst(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x) })
}

/// Runs the suite in dimension `config.d`, with random inputs seeded from `config.seed`.
pub fn run(exp: &Experiment) -> Result<Vec<Verdict>, CliError> {
    let d = exp.config.d;
    let mut rng = ChaCha8Rng::seed_from_u64(exp.config.seed);
    rng.set_stream(3);
    let mut out = Vec::new();

    let path = flow::simulate_path_with(&exp.spec, 100.0, 1e-3, exp.seed(0), &exp.config.sim_options())?;
    out.push(Verdict::at_most(
        "constraint_residual",
        worst((0..path.len()).step_by(7).chain([path.len() - 1]).map(|i| path.g(i).constraint_residual())),
        1e-8,
        "max |g Q g^T - Q| / cosh^2 r over a T = 100 path",
    ));

    let gs: Vec<LorentzElem> = (0..SAMPLES).map(|_| random_lorentz(d, &mut rng)).collect();
    let mut polar = 0.0f64;
    let mut iwasawa = 0.0f64;
    let mut link = 0.0f64;
    let mut link2 = 0.0f64;
    for g in &gs {
        let scale = frob(g.matrix()).max(1.0);
        let p = lorentz::polar_decompose(g)?;
        polar = polar.max(frob(&(p.reassemble()?.matrix() - g.matrix())) / scale);
        let iw = lorentz::iwasawa_decompose(g)?;
        iwasawa = iwasawa.max(frob(&(iw.reassemble().matrix() - g.matrix())) / scale);
        let h = 0.5 * iw.b.norm_squared();
        link = link.max((p.r.cosh() - ((1.0 + h) * iw.u.cosh() + h * iw.u.sinh())).abs() / p.r.cosh());
        link2 = link2.max((iw.u - lorentz::u_from_polar(p.r, p.theta[0])).abs() / (1.0 + iw.u.abs()));
    }
    out.push(Verdict::at_most("polar_reassembly", polar, 1e-9, "max relative |rot s(r, theta) - g|"));
    out.push(Verdict::at_most("iwasawa_reassembly", iwasawa, 1e-9, "max relative |n a k - g|"));
    out.push(Verdict::at_most("link_b_u", link, 1e-8, "max relative |cosh r - cosh r(b, u)|"));
    out.push(Verdict::at_most("link_u_theta", link2, 1e-8, "max |u - log(cosh r + theta^1 sinh r)| / (1 + |u|)"));

    let mut hom = 0.0f64;
    let mut jac = 0.0f64;
    for _ in 0..SAMPLES {
        let (g, h) = (random_elem(d, &mut rng), random_elem(d, &mut rng));
        let x = random_alg(d, &mut rng);
        let lhs = poincare::adjoint(&(&g * &h), &x);
        let rhs = poincare::adjoint(&g, &poincare::adjoint(&h, &x));
        hom = hom.max(size(&(&lhs - &rhs)) / size(&lhs).max(1.0));
        let (a, b, c) = (random_alg(d, &mut rng), random_alg(d, &mut rng), random_alg(d, &mut rng));
        let br = poincare::bracket;
        let j = &(&br(&a, &br(&b, &c)) + &br(&b, &br(&c, &a))) + &br(&c, &br(&a, &b));
        jac = jac.max(size(&j));
    }
    out.push(Verdict::at_most("adjoint_homomorphism", hom, 1e-9, "max relative |Ad(gh) X - Ad(g) Ad(h) X|"));
    out.push(Verdict::at_most("jacobi", jac, 1e-12, "max |Jacobi sum| on coordinates in [-1, 1]"));

    let split = worst((0..SAMPLES).map(|_| {
        let xi = MinkVec::new(uniform(&mut rng, d + 1, 10.0)).expect("length matches");
        (&light_split(&xi).sum() - &xi).euclid_norm() / xi.euclid_norm().max(1.0)
    }));
    out.push(Verdict::at_most("light_split_reconstruction", split, 1e-12, "max relative |sum of parts - xi|"));

    let adn = worst(gs.iter().take(50).map(|g| {
        let v = poincare::ad_operator_norm(&PoincareElem::linear(g.clone()), &NormChoice::Frobenius);
        (v / g.rapidity().exp() - 1.0).abs()
    }));
    out.push(Verdict::at_most("ad_norm_is_exp_rapidity", adn, 1e-8, "max |Frobenius |Ad(g, 0)|_op / e^r(g) - 1|"));

    let r = 2.0;
    let th = unit(&mut rng, d);
    let samples: Vec<PoincareElem> =
        (0..=1000).map(|i| PoincareElem::linear(boost(r * i as f64 / 1000.0, &th).expect("unit direction"))).collect();
    let len = poincare::path_length(&samples, &exp.metric)?;
    out.push(Verdict::at_most(
        "boost_path_length",
        (len / (exp.metric.kappa * r) - 1.0).abs(),
        1e-6,
        "|length of t -> S(t r, theta) / (kappa r) - 1|, 1000 steps",
    ));

    let short = flow::simulate_path_with(&exp.spec, 4.0, 0.01, exp.seed(0), &exp.config.sim_options())?;
    let est = estimate_asymptotics(&short, exp.config.tail_fraction)?;
    let np = est.n_inf_hat.apply(&MinkVec::light_plus(d));
    let scale = np.euclid_norm_sq().max(1.0);
    let mut horo = 0.0f64;
    let mut flat = 0.0f64;
    for _ in 0..20 {
        let x = LorentzAlg::nbar_combination(d, &uniform(&mut rng, d - 1, 2.0));
        let u = rng.random_range(-3.0..3.0);
        let (vel, pos) = stable_leaf_point(&est, &x, u)?;
        horo = horo.max((q(&vel, &np)? - q(&MinkVec::basis(d, 0), &np)?).abs() / scale);
        let psi = &pos - &(&np * u);
        flat = flat.max(q(&psi, &np)?.abs() / (scale * (1.0 + est.lambda_inf_hat.abs())));
    }
    out.push(Verdict::at_most("horosphere_identity", horo, 1e-9, "max |q(v, n(e0+e1)) - q(e0, n(e0+e1))| / |n(e0+e1)|^2"));
    out.push(Verdict::at_most("leaf_translation_flatness", flat, 1e-9, "max |q(psi, n(e0+e1))| / (|n(e0+e1)|^2 (1 + |lambda|))"));
    Ok(out)
}
