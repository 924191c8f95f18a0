//! Dormand–Prince 8(5,3) explicit Runge–Kutta step with Hairer's error
//! estimate and step-size controller.

use serde::{Deserialize, Serialize};

const A: [&[f64]; 12] = [
    &[],
    &[5.26001519587677318785587544488E-2],
    &[1.97250569845378994544595329183E-2, 5.91751709536136983633785987549E-2],
    &[2.95875854768068491816892993775E-2, 0.0, 8.87627564304205475450678981324E-2],
    &[2.41365134159266685502369798665E-1, 0.0, -8.84549479328286085344864962717E-1, 9.24834003261792003115737966543E-1],
    &[3.7037037037037037037037037037E-2, 0.0, 0.0, 1.70828608729473871279604482173E-1, 1.25467687566822425016691814123E-1],
    &[3.7109375E-2, 0.0, 0.0, 1.70252211019544039314978060272E-1, 6.02165389804559606850219397283E-2, -1.7578125E-2],
    &[3.70920001185047927108779319836E-2, 0.0, 0.0, 1.70383925712239993810214054705E-1, 1.07262030446373284651809199168E-1, -1.53194377486244017527936158236E-2, 8.27378916381402288758473766002E-3],
    &[6.24110958716075717114429577812E-1, 0.0, 0.0, -3.36089262944694129406857109825E0, -8.68219346841726006818189891453E-1, 2.75920996994467083049415600797E1, 2.01540675504778934086186788979E1, -4.34898841810699588477366255144E1],
    &[4.77662536438264365890433908527E-1, 0.0, 0.0, -2.48811461997166764192642586468E0, -5.90290826836842996371446475743E-1, 2.12300514481811942347288949897E1, 1.52792336328824235832596922938E1, -3.32882109689848629194453265587E1, -2.03312017085086261358222928593E-2],
    &[-9.3714243008598732571704021658E-1, 0.0, 0.0, 5.18637242884406370830023853209E0, 1.09143734899672957818500254654E0, -8.14978701074692612513997267357E0, -1.85200656599969598641566180701E1, 2.27394870993505042818970056734E1, 2.49360555267965238987089396762E0, -3.0467644718982195003823669022E0],
    &[2.27331014751653820792359768449E0, 0.0, 0.0, -1.05344954667372501984066689879E1, -2.00087205822486249909675718444E0, -1.79589318631187989172765950534E1, 2.79488845294199600508499808837E1, -2.85899827713502369474065508674E0, -8.87285693353062954433549289258E0, 1.23605671757943030647266201528E1, 6.43392746015763530355970484046E-1],
];
const B: [f64; 12] = [5.42937341165687622380535766363E-2, 0.0, 0.0, 0.0, 0.0, 4.45031289275240888144113950566E0, 1.89151789931450038304281599044E0, -5.8012039600105847814672114227E0, 3.1116436695781989440891606237E-1, -1.52160949662516078556178806805E-1, 2.01365400804030348374776537501E-1, 4.47106157277725905176885569043E-2];
const BHH: [f64; 3] = [0.244094488188976377952755905512E+00, 0.733846688281611857341361741547E+00, 0.220588235294117647058823529412E-01];
#[cfg(test)]
const C: [f64; 12] = [0.0, 0.526001519587677318785587544488E-01, 0.789002279381515978178381316732E-01, 0.118350341907227396726757197510E+00, 0.281649658092772603273242802490E+00, 0.333333333333333333333333333333E+00, 0.25E+00, 0.307692307692307692307692307692E+00, 0.651282051282051282051282051282E+00, 0.6E+00, 0.857142857142857142857142857142E+00, 1.0];
const E: [f64; 12] = [0.1312004499419488073250102996E-01, 0.0, 0.0, 0.0, 0.0, -0.1225156446376204440720569753E+01, -0.4957589496572501915214079952E+00, 0.1664377182454986536961530415E+01, -0.3503288487499736816886487290E+00, 0.3341791187130174790297318841E+00, 0.8192320648511571246570742613E-01, -0.2235530786388629525884427845E-01];

/// Tolerances and limits for the adaptive integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Crossing-time resolution of boundary events.
    pub event_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, initial_step: 0.05, max_step: 1.0, max_steps: 1_000_000, event_tol: 1e-12 }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }
}

/// One step of size `h` from `y` with `k1 = f(y)`. Returns the new state and
/// the scaled error norm, measured on the first `controlled` components only.
pub(crate) fn dop853_step<const N: usize>(
    f: &impl Fn(&[f64; N]) -> [f64; N],
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    controlled: usize,
    cfg: &IntegratorConfig,
) -> ([f64; N], f64) {
    let mut k = [[0.0; N]; 12];
    k[0] = *k1;
    for s in 1..12 {
        let mut ys = *y;
        for (j, a) in A[s].iter().enumerate() {
            if *a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * k[j][i];
                }
            }
        }
        k[s] = f(&ys);
    }
    let mut y_new = *y;
    let mut incr = [0.0; N];
    for i in 0..N {
        let mut acc = 0.0;
        for s in 0..12 {
            acc += B[s] * k[s][i];
        }
        incr[i] = acc;
        y_new[i] += h * acc;
    }
    let (mut err5, mut err3) = (0.0, 0.0);
    for i in 0..controlled {
        let sc = cfg.atol + y[i].abs().max(y_new[i].abs()) * cfg.rtol;
        let mut e5 = 0.0;
        for s in 0..12 {
            e5 += E[s] * k[s][i];
        }
        let e3 = incr[i] - BHH[0] * k[0][i] - BHH[1] * k[8][i] - BHH[2] * k[11][i];
        err5 += (e5 / sc) * (e5 / sc);
        err3 += (e3 / sc) * (e3 / sc);
    }
    let mut deno = err5 + 0.01 * err3;
    if deno <= 0.0 {
        deno = 1.0;
    }
    let err = h.abs() * err5 * (1.0 / (deno * controlled as f64)).sqrt();
    (y_new, err)
}

/// Next step size after a step of size `h` with error `err`.
pub(crate) fn next_step(h: f64, err: f64) -> f64 {
    let fac = (err.powf(0.125) / 0.9).clamp(1.0 / 6.0, 3.0);
    h / fac
}
