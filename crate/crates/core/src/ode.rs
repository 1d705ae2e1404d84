//! Dormand–Prince 8(5,3) integrator with its seventh-order continuous extension.
//!
//! Step-size control follows Hairer, Nørsett & Wanner, *Solving Ordinary
//! Differential Equations I*, with the combined 5th/3rd order error estimate.
//! Every accepted step keeps its dense-output polynomial, so the returned
//! [`Trajectory`] can be evaluated anywhere in the integration interval.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Dop853Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Dop853Options {
    pub fn with_tolerance(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, h_max: f64::INFINITY, max_steps: 200_000 }
    }
}

/// Dense-output polynomial of one accepted step.
#[derive(Debug, Clone)]
pub struct DenseStep<const D: usize> {
    t: f64,
    h: f64,
    cont: [[f64; D]; 8],
}

impl<const D: usize> DenseStep<D> {
    pub fn start(&self) -> f64 {
        self.t
    }

    pub fn end(&self) -> f64 {
        self.t + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; D] {
        let s = (t - self.t) / self.h;
        let s1 = 1.0 - s;
        let c = &self.cont;
        let mut out = [0.0; D];
        for i in 0..D {
            let conpar = c[4][i] + s * (c[5][i] + s1 * (c[6][i] + s * c[7][i]));
            out[i] = c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * conpar)));
        }
        out
    }
}

/// Accepted steps of one integration run, evaluable anywhere in `[t0, t1]`.
#[derive(Debug, Clone)]
pub struct Trajectory<const D: usize> {
    steps: Vec<DenseStep<D>>,
    t0: f64,
    y0: [f64; D],
    y_end: [f64; D],
    evaluations: usize,
}

impl<const D: usize> Trajectory<D> {
    pub fn end_state(&self) -> [f64; D] {
        self.y_end
    }

    pub fn steps(&self) -> usize {
        self.steps.len()
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn eval(&self, t: f64) -> [f64; D] {
        if self.steps.is_empty() || t <= self.t0 {
            return self.y0;
        }
        let last = self.steps.len() - 1;
        if t >= self.steps[last].end() {
            return self.y_end;
        }
        let idx = self.steps.partition_point(|s| s.end() < t).min(last);
        self.steps[idx].eval(t)
    }
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        let mut acc = 0.0;
        for (w, k) in terms {
            acc += w * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn combine<const D: usize>(terms: &[(f64, &[f64; D])]) -> [f64; D] {
    axpy(&[0.0; D], 1.0, terms)
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`.
pub fn integrate<const D: usize, F>(f: F, t0: f64, y0: [f64; D], t1: f64, opts: &Dop853Options) -> Result<Trajectory<D>>
where
    F: Fn(f64, &[f64; D], &mut [f64; D]),
{
    integrate_with_stops(f, t0, y0, t1, &[], opts).map(|(trajectory, _)| trajectory)
}

/// [`integrate`], additionally landing a step exactly on each of the sorted
/// `stops` and returning the state there.
///
/// Values at step ends carry the accumulated global error only, which varies
/// slowly from stop to stop; dense output adds an interpolation error that
/// changes from step to step and is amplified by later spectral differentiation.
pub fn integrate_with_stops<const D: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; D],
    t1: f64,
    stops: &[f64],
    opts: &Dop853Options,
) -> Result<(Trajectory<D>, Vec<[f64; D]>)>
where
    F: Fn(f64, &[f64; D], &mut [f64; D]),
{
    const SAFE: f64 = 0.9;
    const FACC1: f64 = 1.0 / 0.333;
    const FACC2: f64 = 1.0 / 6.0;
    const EXPO: f64 = 1.0 / 8.0;

    let eval = |t: f64, y: &[f64; D]| {
        let mut dy = [0.0; D];
        f(t, y, &mut dy);
        dy
    };
    let span = t1 - t0;
    let h_max = opts.h_max.min(span.abs());
    let mut t = t0;
    let mut y = y0;
    // Compensated summation of the increments keeps round-off from random-walking over many steps.
    let mut carry = [0.0; D];
    let mut k1 = eval(t, &y);
    let mut evaluations = 1;
    let mut h = initial_step(&eval, t0, &y0, &k1, h_max, opts);
    evaluations += 1;
    let mut last_rejected = false;
    let mut steps = Vec::new();
    let mut at_stops = Vec::with_capacity(stops.len());
    let mut next_stop = 0;
    while next_stop < stops.len() && stops[next_stop] <= t0 {
        at_stops.push(y0);
        next_stop += 1;
    }

    for _ in 0..opts.max_steps {
        if t >= t1 {
            while at_stops.len() < stops.len() {
                at_stops.push(y);
            }
            return Ok((Trajectory { steps, t0, y0, y_end: y, evaluations }, at_stops));
        }
        if h < 1e3 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepFailure { t, h });
        }
        let target = stops.get(next_stop).copied().filter(|&s| s < t1).unwrap_or(t1);
        let proposed = h;
        let mut landed = false;
        if t + 1.01 * h >= target {
            h = target - t;
            landed = true;
        }
        let last = landed && target == t1;

        let k2 = eval(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = eval(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = eval(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A43, &k3)]));
        let k5 = eval(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A53, &k3), (A54, &k4)]));
        let k6 = eval(t + C6 * h, &axpy(&y, h, &[(A61, &k1), (A64, &k4), (A65, &k5)]));
        let k7 = eval(t + C7 * h, &axpy(&y, h, &[(A71, &k1), (A74, &k4), (A75, &k5), (A76, &k6)]));
        let k8 = eval(t + C8 * h, &axpy(&y, h, &[(A81, &k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)]));
        let k9 = eval(
            t + C9 * h,
            &axpy(&y, h, &[(A91, &k1), (A94, &k4), (A95, &k5), (A96, &k6), (A97, &k7), (A98, &k8)]),
        );
        let k10 = eval(
            t + C10 * h,
            &axpy(&y, h, &[(A101, &k1), (A104, &k4), (A105, &k5), (A106, &k6), (A107, &k7), (A108, &k8), (A109, &k9)]),
        );
        let k11 = eval(
            t + C11 * h,
            &axpy(
                &y,
                h,
                &[(A111, &k1), (A114, &k4), (A115, &k5), (A116, &k6), (A117, &k7), (A118, &k8), (A119, &k9), (A1110, &k10)],
            ),
        );
        let y12 = axpy(
            &y,
            h,
            &[
                (A121, &k1),
                (A124, &k4),
                (A125, &k5),
                (A126, &k6),
                (A127, &k7),
                (A128, &k8),
                (A129, &k9),
                (A1210, &k10),
                (A1211, &k11),
            ],
        );
        let k12 = eval(t + h, &y12);
        evaluations += 11;
        let slope = combine(&[(B1, &k1), (B6, &k6), (B7, &k7), (B8, &k8), (B9, &k9), (B10, &k10), (B11, &k11), (B12, &k12)]);
        let increment: [f64; D] = std::array::from_fn(|i| h * slope[i] + carry[i]);
        let y_new: [f64; D] = std::array::from_fn(|i| y[i] + increment[i]);

        let mut err = 0.0;
        let mut err2 = 0.0;
        for i in 0..D {
            let sk = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            let e2 = slope[i] - BHH1 * k1[i] - BHH2 * k9[i] - BHH3 * k12[i];
            err2 += (e2 / sk).powi(2);
            let e = ER1 * k1[i]
                + ER6 * k6[i]
                + ER7 * k7[i]
                + ER8 * k8[i]
                + ER9 * k9[i]
                + ER10 * k10[i]
                + ER11 * k11[i]
                + ER12 * k12[i];
            err += (e / sk).powi(2);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err * (1.0 / (deno * D as f64)).sqrt();
        let fac11 = err.powf(EXPO);
        let fac = FACC2.max(FACC1.min(fac11 / SAFE));
        let mut h_new = h / fac;

        if err <= 1.0 {
            let k_end = eval(t + h, &y_new);
            evaluations += 1;

            let ydiff: [f64; D] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; D] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
            let mut cont = [[0.0; D]; 8];
            cont[0] = y;
            cont[1] = ydiff;
            cont[2] = bspl;
            cont[3] = std::array::from_fn(|i| ydiff[i] - h * k_end[i] - bspl[i]);
            let d_rows = [
                [D41, D46, D47, D48, D49, D410, D411, D412, D413, D414, D415, D416],
                [D51, D56, D57, D58, D59, D510, D511, D512, D513, D514, D515, D516],
                [D61, D66, D67, D68, D69, D610, D611, D612, D613, D614, D615, D616],
                [D71, D76, D77, D78, D79, D710, D711, D712, D713, D714, D715, D716],
            ];
            let k14 = eval(
                t + C14 * h,
                &axpy(
                    &y,
                    h,
                    &[
                        (A141, &k1),
                        (A147, &k7),
                        (A148, &k8),
                        (A149, &k9),
                        (A1410, &k10),
                        (A1411, &k11),
                        (A1412, &k12),
                        (A1413, &k_end),
                    ],
                ),
            );
            let k15 = eval(
                t + C15 * h,
                &axpy(
                    &y,
                    h,
                    &[
                        (A151, &k1),
                        (A156, &k6),
                        (A157, &k7),
                        (A158, &k8),
                        (A1511, &k11),
                        (A1512, &k12),
                        (A1513, &k_end),
                        (A1514, &k14),
                    ],
                ),
            );
            let k16 = eval(
                t + C16 * h,
                &axpy(
                    &y,
                    h,
                    &[
                        (A161, &k1),
                        (A166, &k6),
                        (A167, &k7),
                        (A168, &k8),
                        (A169, &k9),
                        (A1613, &k_end),
                        (A1614, &k14),
                        (A1615, &k15),
                    ],
                ),
            );
            evaluations += 3;
            for (row, d) in d_rows.iter().enumerate() {
                cont[4 + row] = std::array::from_fn(|i| {
                    h * (d[0] * k1[i]
                        + d[1] * k6[i]
                        + d[2] * k7[i]
                        + d[3] * k8[i]
                        + d[4] * k9[i]
                        + d[5] * k10[i]
                        + d[6] * k11[i]
                        + d[7] * k12[i]
                        + d[8] * k_end[i]
                        + d[9] * k14[i]
                        + d[10] * k15[i]
                        + d[11] * k16[i])
                });
            }
            steps.push(DenseStep { t, h, cont });

            k1 = k_end;
            carry = std::array::from_fn(|i| increment[i] - (y_new[i] - y[i]));
            y = y_new;
            t = if landed { target } else { t + h };
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::StepFailure { t, h });
            }
            if landed && !last {
                at_stops.push(y);
                next_stop += 1;
                h_new = h_new.max(proposed);
            }
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
        } else {
            h_new = h / FACC1.min(fac11 / SAFE);
            last_rejected = true;
        }
        h = h_new.min(h_max);
    }
    Err(Error::StepFailure { t, h })
}

fn initial_step<const D: usize, E>(eval: &E, t0: f64, y0: &[f64; D], f0: &[f64; D], h_max: f64, opts: &Dop853Options) -> f64
where
    E: Fn(f64, &[f64; D]) -> [f64; D],
{
    let sk: [f64; D] = std::array::from_fn(|i| opts.atol + opts.rtol * y0[i].abs());
    let dnf: f64 = (0..D).map(|i| (f0[i] / sk[i]).powi(2)).sum();
    let dny: f64 = (0..D).map(|i| (y0[i] / sk[i]).powi(2)).sum();
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(h_max);
    let y1 = axpy(y0, h, &[(1.0, f0)]);
    let f1 = eval(t0 + h, &y1);
    let der2 = ((0..D).map(|i| ((f1[i] - f0[i]) / sk[i]).powi(2)).sum::<f64>()).sqrt() / h;
    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h.abs() * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
    (100.0 * h).min(h1).min(h_max)
}

// Coefficients of the DOP853 tableau, error estimators and dense output.
const A21: f64 = 5.26001519587677318785587544488e-2;
const A31: f64 = 1.97250569845378994544595329183e-2;
const A32: f64 = 5.91751709536136983633785987549e-2;
const A41: f64 = 2.95875854768068491816892993775e-2;
const A43: f64 = 8.87627564304205475450678981324e-2;
const A51: f64 = 2.41365134159266685502369798665e-1;
const A53: f64 = -8.84549479328286085344864962717e-1;
const A54: f64 = 9.24834003261792003115737966543e-1;
const A61: f64 = 3.7037037037037037037037037037e-2;
const A64: f64 = 1.70828608729473871279604482173e-1;
const A65: f64 = 1.25467687566822425016691814123e-1;
const A71: f64 = 3.7109375e-2;
const A74: f64 = 1.70252211019544039314978060272e-1;
const A75: f64 = 6.02165389804559606850219397283e-2;
const A76: f64 = -1.7578125e-2;
const A81: f64 = 3.70920001185047927108779319836e-2;
const A84: f64 = 1.70383925712239993810214054705e-1;
const A85: f64 = 1.07262030446373284651809199168e-1;
const A86: f64 = -1.53194377486244017527936158236e-2;
const A87: f64 = 8.27378916381402288758473766002e-3;
const A91: f64 = 6.24110958716075717114429577812e-1;
const A94: f64 = -3.36089262944694129406857109825e0;
const A95: f64 = -8.68219346841726006818189891453e-1;
const A96: f64 = 2.75920996994467083049415600797e1;
const A97: f64 = 2.01540675504778934086186788979e1;
const A98: f64 = -4.34898841810699588477366255144e1;
const A101: f64 = 4.77662536438264365890433908527e-1;
const A104: f64 = -2.48811461997166764192642586468e0;
const A105: f64 = -5.90290826836842996371446475743e-1;
const A106: f64 = 2.12300514481811942347288949897e1;
const A107: f64 = 1.52792336328824235832596922938e1;
const A108: f64 = -3.32882109689848629194453265587e1;
const A109: f64 = -2.03312017085086261358222928593e-2;
const A111: f64 = -9.3714243008598732571704021658e-1;
const A114: f64 = 5.18637242884406370830023853209e0;
const A115: f64 = 1.09143734899672957818500254654e0;
const A116: f64 = -8.14978701074692612513997267357e0;
const A117: f64 = -1.85200656599969598641566180701e1;
const A118: f64 = 2.27394870993505042818970056734e1;
const A119: f64 = 2.49360555267965238987089396762e0;
const A1110: f64 = -3.0467644718982195003823669022e0;
const A121: f64 = 2.27331014751653820792359768449e0;
const A124: f64 = -1.05344954667372501984066689879e1;
const A125: f64 = -2.00087205822486249909675718444e0;
const A126: f64 = -1.79589318631187989172765950534e1;
const A127: f64 = 2.79488845294199600508499808837e1;
const A128: f64 = -2.85899827713502369474065508674e0;
const A129: f64 = -8.87285693353062954433549289258e0;
const A1210: f64 = 1.23605671757943030647266201528e1;
const A1211: f64 = 6.43392746015763530355970484046e-1;
const A141: f64 = 5.61675022830479523392909219681e-2;
const A147: f64 = 2.53500210216624811088794765333e-1;
const A148: f64 = -2.46239037470802489917441475441e-1;
const A149: f64 = -1.24191423263816360469010140626e-1;
const A1410: f64 = 1.5329179827876569731206322685e-1;
const A1411: f64 = 8.20105229563468988491666602057e-3;
const A1412: f64 = 7.56789766054569976138603589584e-3;
const A1413: f64 = -8.298e-3;
const A151: f64 = 3.18346481635021405060768473261e-2;
const A156: f64 = 2.83009096723667755288322961402e-2;
const A157: f64 = 5.35419883074385676223797384372e-2;
const A158: f64 = -5.49237485713909884646569340306e-2;
const A1511: f64 = -1.08347328697249322858509316994e-4;
const A1512: f64 = 3.82571090835658412954920192323e-4;
const A1513: f64 = -3.40465008687404560802977114492e-4;
const A1514: f64 = 1.41312443674632500278074618366e-1;
const A161: f64 = -4.28896301583791923408573538692e-1;
const A166: f64 = -4.69762141536116384314449447206e0;
const A167: f64 = 7.68342119606259904184240953878e0;
const A168: f64 = 4.06898981839711007970213554331e0;
const A169: f64 = 3.56727187455281109270669543021e-1;
const A1613: f64 = -1.39902416515901462129418009734e-3;
const A1614: f64 = 2.9475147891527723389556272149e0;
const A1615: f64 = -9.15095847217987001081870187138e0;
const B1: f64 = 5.42937341165687622380535766363e-2;
const B6: f64 = 4.45031289275240888144113950566e0;
const B7: f64 = 1.89151789931450038304281599044e0;
const B8: f64 = -5.8012039600105847814672114227e0;
const B9: f64 = 3.1116436695781989440891606237e-1;
const B10: f64 = -1.52160949662516078556178806805e-1;
const B11: f64 = 2.01365400804030348374776537501e-1;
const B12: f64 = 4.47106157277725905176885569043e-2;
const BHH1: f64 = 0.244094488188976377952755905512e+00;
const BHH2: f64 = 0.733846688281611857341361741547e+00;
const BHH3: f64 = 0.220588235294117647058823529412e-01;
const C2: f64 = 0.526001519587677318785587544488e-01;
const C3: f64 = 0.789002279381515978178381316732e-01;
const C4: f64 = 0.118350341907227396726757197510e+00;
const C5: f64 = 0.281649658092772603273242802490e+00;
const C6: f64 = 0.333333333333333333333333333333e+00;
const C7: f64 = 0.25e+00;
const C8: f64 = 0.307692307692307692307692307692e+00;
const C9: f64 = 0.651282051282051282051282051282e+00;
const C10: f64 = 0.6e+00;
const C11: f64 = 0.857142857142857142857142857142e+00;
const C14: f64 = 0.1e+00;
const C15: f64 = 0.2e+00;
const C16: f64 = 0.777777777777777777777777777778e+00;
const ER1: f64 = 0.1312004499419488073250102996e-01;
const ER6: f64 = -0.1225156446376204440720569753e+01;
const ER7: f64 = -0.4957589496572501915214079952e+00;
const ER8: f64 = 0.1664377182454986536961530415e+01;
const ER9: f64 = -0.3503288487499736816886487290e+00;
const ER10: f64 = 0.3341791187130174790297318841e+00;
const ER11: f64 = 0.8192320648511571246570742613e-01;
const ER12: f64 = -0.2235530786388629525884427845e-01;
const D41: f64 = -0.84289382761090128651353491142e+01;
const D46: f64 = 0.56671495351937776962531783590e+00;
const D47: f64 = -0.30689499459498916912797304727e+01;
const D48: f64 = 0.23846676565120698287728149680e+01;
const D49: f64 = 0.21170345824450282767155149946e+01;
const D410: f64 = -0.87139158377797299206789907490e+00;
const D411: f64 = 0.22404374302607882758541771650e+01;
const D412: f64 = 0.63157877876946881815570249290e+00;
const D413: f64 = -0.88990336451333310820698117400e-01;
const D414: f64 = 0.18148505520854727256656404962e+02;
const D415: f64 = -0.91946323924783554000451984436e+01;
const D416: f64 = -0.44360363875948939664310572000e+01;
const D51: f64 = 0.10427508642579134603413151009e+02;
const D56: f64 = 0.24228349177525818288430175319e+03;
const D57: f64 = 0.16520045171727028198505394887e+03;
const D58: f64 = -0.37454675472269020279518312152e+03;
const D59: f64 = -0.22113666853125306036270938578e+02;
const D510: f64 = 0.77334326684722638389603898808e+01;
const D511: f64 = -0.30674084731089398182061213626e+02;
const D512: f64 = -0.93321305264302278729567221706e+01;
const D513: f64 = 0.15697238121770843886131091075e+02;
const D514: f64 = -0.31139403219565177677282850411e+02;
const D515: f64 = -0.93529243588444783865713862664e+01;
const D516: f64 = 0.35816841486394083752465898540e+02;
const D61: f64 = 0.19985053242002433820987653617e+02;
const D66: f64 = -0.38703730874935176555105901742e+03;
const D67: f64 = -0.18917813819516756882830838328e+03;
const D68: f64 = 0.52780815920542364900561016686e+03;
const D69: f64 = -0.11573902539959630126141871134e+02;
const D610: f64 = 0.68812326946963000169666922661e+01;
const D611: f64 = -0.10006050966910838403183860980e+01;
const D612: f64 = 0.77771377980534432092869265740e+00;
const D613: f64 = -0.27782057523535084065932004339e+01;
const D614: f64 = -0.60196695231264120758267380846e+02;
const D615: f64 = 0.84320405506677161018159903784e+02;
const D616: f64 = 0.11992291136182789328035130030e+02;
const D71: f64 = -0.25693933462703749003312586129e+02;
const D76: f64 = -0.15418974869023643374053993627e+03;
const D77: f64 = -0.23152937917604549567536039109e+03;
const D78: f64 = 0.35763911791061412378285349910e+03;
const D79: f64 = 0.93405324183624310003907691704e+02;
const D710: f64 = -0.37458323136451633156875139351e+02;
const D711: f64 = 0.10409964950896230045147246184e+03;
const D712: f64 = 0.29840293426660503123344363579e+02;
const D713: f64 = -0.43533456590011143754432175058e+02;
const D714: f64 = 0.96324553959188282948394950600e+02;
const D715: f64 = -0.39177261675615439165231486172e+02;
const D716: f64 = -0.14972683625798562581422125276e+03;
