//! One-sample Student t-test against embedded one-sided critical values.
//!
//! Critical values are tabulated for degrees of freedom 1..=200 at the
//! one-sided confidence levels 0.95, 0.99, and 0.9975; larger df fall back
//! to the normal approximation. Embedding the table avoids a numerics
//! dependency for a single statistic.

use crate::error::{Error, Result};

/// Supported one-sided confidence levels.
const CONFIDENCES: [f64; 3] = [0.95, 0.99, 0.9975];

/// Normal-approximation critical values for df > 200, same column order.
const NORMAL_CRIT: [f64; 3] = [1.644854, 2.326348, 2.807034];

/// t critical values, rows df=1..=200, columns per `CONFIDENCES`.
#[rustfmt::skip]
const T_CRIT: [[f64; 3]; 200] = [
    [6.313752, 31.820516, 127.321336],
    [2.919986, 6.964557, 14.089047],
    [2.353363, 4.540703, 7.453319],
    [2.131847, 3.746947, 5.597568],
    [2.015048, 3.364930, 4.773341],
    [1.943180, 3.142668, 4.316827],
    [1.894579, 2.997952, 4.029337],
    [1.859548, 2.896459, 3.832519],
    [1.833113, 2.821438, 3.689662],
    [1.812461, 2.763769, 3.581406],
    [1.795885, 2.718079, 3.496614],
    [1.782288, 2.680998, 3.428444],
    [1.770933, 2.650309, 3.372468],
    [1.761310, 2.624494, 3.325696],
    [1.753050, 2.602480, 3.286039],
    [1.745884, 2.583487, 3.251993],
    [1.739607, 2.566934, 3.222450],
    [1.734064, 2.552380, 3.196574],
    [1.729133, 2.539483, 3.173725],
    [1.724718, 2.527977, 3.153401],
    [1.720743, 2.517648, 3.135206],
    [1.717144, 2.508325, 3.118824],
    [1.713872, 2.499867, 3.103997],
    [1.710882, 2.492159, 3.090514],
    [1.708141, 2.485107, 3.078199],
    [1.705618, 2.478630, 3.066909],
    [1.703288, 2.472660, 3.056520],
    [1.701131, 2.467140, 3.046929],
    [1.699127, 2.462021, 3.038047],
    [1.697261, 2.457262, 3.029798],
    [1.695519, 2.452824, 3.022118],
    [1.693889, 2.448678, 3.014949],
    [1.692360, 2.444794, 3.008242],
    [1.690924, 2.441150, 3.001954],
    [1.689572, 2.437723, 2.996047],
    [1.688298, 2.434494, 2.990487],
    [1.687094, 2.431447, 2.985244],
    [1.685954, 2.428568, 2.980293],
    [1.684875, 2.425841, 2.975609],
    [1.683851, 2.423257, 2.971171],
    [1.682878, 2.420803, 2.966961],
    [1.681952, 2.418470, 2.962962],
    [1.681071, 2.416250, 2.959157],
    [1.680230, 2.414134, 2.955534],
    [1.679427, 2.412116, 2.952079],
    [1.678660, 2.410188, 2.948781],
    [1.677927, 2.408345, 2.945630],
    [1.677224, 2.406581, 2.942616],
    [1.676551, 2.404892, 2.939730],
    [1.675905, 2.403272, 2.936964],
    [1.675285, 2.401718, 2.934311],
    [1.674689, 2.400225, 2.931765],
    [1.674116, 2.398790, 2.929318],
    [1.673565, 2.397410, 2.926965],
    [1.673034, 2.396081, 2.924701],
    [1.672522, 2.394801, 2.922521],
    [1.672029, 2.393568, 2.920420],
    [1.671553, 2.392377, 2.918394],
    [1.671093, 2.391229, 2.916440],
    [1.670649, 2.390119, 2.914553],
    [1.670219, 2.389047, 2.912729],
    [1.669804, 2.388011, 2.910967],
    [1.669402, 2.387008, 2.909262],
    [1.669013, 2.386037, 2.907613],
    [1.668636, 2.385097, 2.906015],
    [1.668271, 2.384186, 2.904468],
    [1.667916, 2.383302, 2.902968],
    [1.667572, 2.382446, 2.901514],
    [1.667239, 2.381615, 2.900103],
    [1.666914, 2.380807, 2.898734],
    [1.666600, 2.380024, 2.897404],
    [1.666294, 2.379262, 2.896113],
    [1.665996, 2.378522, 2.894857],
    [1.665707, 2.377802, 2.893637],
    [1.665425, 2.377102, 2.892450],
    [1.665151, 2.376420, 2.891295],
    [1.664885, 2.375757, 2.890171],
    [1.664625, 2.375111, 2.889077],
    [1.664371, 2.374482, 2.888011],
    [1.664125, 2.373868, 2.886972],
    [1.663884, 2.373270, 2.885960],
    [1.663649, 2.372687, 2.884973],
    [1.663420, 2.372119, 2.884010],
    [1.663197, 2.371564, 2.883071],
    [1.662978, 2.371022, 2.882154],
    [1.662765, 2.370493, 2.881260],
    [1.662557, 2.369977, 2.880386],
    [1.662354, 2.369472, 2.879533],
    [1.662155, 2.368979, 2.878699],
    [1.661961, 2.368497, 2.877884],
    [1.661771, 2.368026, 2.877088],
    [1.661585, 2.367566, 2.876309],
    [1.661404, 2.367115, 2.875547],
    [1.661226, 2.366674, 2.874802],
    [1.661052, 2.366243, 2.874073],
    [1.660881, 2.365821, 2.873360],
    [1.660715, 2.365407, 2.872661],
    [1.660551, 2.365002, 2.871977],
    [1.660391, 2.364606, 2.871308],
    [1.660234, 2.364217, 2.870652],
    [1.660081, 2.363837, 2.870009],
    [1.659930, 2.363464, 2.869379],
    [1.659782, 2.363098, 2.868761],
    [1.659637, 2.362739, 2.868156],
    [1.659495, 2.362388, 2.867562],
    [1.659356, 2.362043, 2.866980],
    [1.659219, 2.361704, 2.866409],
    [1.659085, 2.361372, 2.865848],
    [1.658953, 2.361046, 2.865298],
    [1.658824, 2.360726, 2.864759],
    [1.658697, 2.360412, 2.864229],
    [1.658573, 2.360104, 2.863709],
    [1.658450, 2.359801, 2.863198],
    [1.658330, 2.359504, 2.862696],
    [1.658212, 2.359212, 2.862203],
    [1.658096, 2.358924, 2.861719],
    [1.657982, 2.358642, 2.861244],
    [1.657870, 2.358365, 2.860776],
    [1.657759, 2.358093, 2.860317],
    [1.657651, 2.357825, 2.859865],
    [1.657544, 2.357561, 2.859421],
    [1.657439, 2.357302, 2.858984],
    [1.657336, 2.357047, 2.858554],
    [1.657235, 2.356797, 2.858132],
    [1.657135, 2.356550, 2.857716],
    [1.657037, 2.356307, 2.857308],
    [1.656940, 2.356069, 2.856905],
    [1.656845, 2.355834, 2.856509],
    [1.656752, 2.355602, 2.856120],
    [1.656659, 2.355375, 2.855736],
    [1.656569, 2.355150, 2.855358],
    [1.656479, 2.354930, 2.854986],
    [1.656391, 2.354712, 2.854620],
    [1.656305, 2.354498, 2.854260],
    [1.656219, 2.354287, 2.853904],
    [1.656135, 2.354079, 2.853554],
    [1.656052, 2.353875, 2.853210],
    [1.655970, 2.353673, 2.852870],
    [1.655890, 2.353474, 2.852535],
    [1.655811, 2.353278, 2.852206],
    [1.655732, 2.353085, 2.851880],
    [1.655655, 2.352895, 2.851560],
    [1.655579, 2.352707, 2.851244],
    [1.655504, 2.352522, 2.850933],
    [1.655430, 2.352340, 2.850626],
    [1.655357, 2.352160, 2.850323],
    [1.655285, 2.351983, 2.850024],
    [1.655215, 2.351808, 2.849730],
    [1.655145, 2.351635, 2.849439],
    [1.655076, 2.351465, 2.849152],
    [1.655007, 2.351297, 2.848870],
    [1.654940, 2.351131, 2.848591],
    [1.654874, 2.350967, 2.848315],
    [1.654808, 2.350806, 2.848044],
    [1.654744, 2.350646, 2.847776],
    [1.654680, 2.350489, 2.847511],
    [1.654617, 2.350334, 2.847250],
    [1.654555, 2.350180, 2.846992],
    [1.654494, 2.350029, 2.846737],
    [1.654433, 2.349880, 2.846486],
    [1.654373, 2.349732, 2.846238],
    [1.654314, 2.349586, 2.845993],
    [1.654256, 2.349442, 2.845751],
    [1.654198, 2.349300, 2.845511],
    [1.654141, 2.349160, 2.845275],
    [1.654085, 2.349021, 2.845042],
    [1.654029, 2.348884, 2.844812],
    [1.653974, 2.348749, 2.844584],
    [1.653920, 2.348615, 2.844359],
    [1.653866, 2.348483, 2.844137],
    [1.653813, 2.348352, 2.843917],
    [1.653761, 2.348223, 2.843700],
    [1.653709, 2.348096, 2.843486],
    [1.653658, 2.347970, 2.843274],
    [1.653607, 2.347845, 2.843064],
    [1.653557, 2.347722, 2.842857],
    [1.653508, 2.347600, 2.842652],
    [1.653459, 2.347479, 2.842450],
    [1.653411, 2.347360, 2.842250],
    [1.653363, 2.347243, 2.842052],
    [1.653316, 2.347126, 2.841856],
    [1.653269, 2.347011, 2.841663],
    [1.653223, 2.346897, 2.841471],
    [1.653177, 2.346785, 2.841282],
    [1.653132, 2.346673, 2.841095],
    [1.653087, 2.346563, 2.840910],
    [1.653043, 2.346454, 2.840726],
    [1.652999, 2.346346, 2.840545],
    [1.652956, 2.346240, 2.840366],
    [1.652913, 2.346134, 2.840189],
    [1.652871, 2.346030, 2.840013],
    [1.652829, 2.345926, 2.839840],
    [1.652787, 2.345824, 2.839668],
    [1.652746, 2.345723, 2.839498],
    [1.652705, 2.345623, 2.839329],
    [1.652665, 2.345524, 2.839163],
    [1.652625, 2.345425, 2.838998],
    [1.652586, 2.345328, 2.838835],
    [1.652547, 2.345232, 2.838674],
    [1.652508, 2.345137, 2.838514],
];

fn critical_value(df: usize, confidence: f64) -> Result<f64> {
    let col = CONFIDENCES
        .iter()
        .position(|c| (c - confidence).abs() < 1e-9)
        .ok_or_else(|| {
            Error::Stats(format!(
                "confidence {confidence} not tabulated; supported: {CONFIDENCES:?}"
            ))
        })?;
    Ok(if df == 0 {
        f64::INFINITY
    } else if df <= 200 {
        T_CRIT[df - 1][col]
    } else {
        NORMAL_CRIT[col]
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestOutcome {
    pub t: f64,
    pub df: usize,
    pub critical: f64,
    /// One-sided rejection of mean <= mu0 at the given confidence.
    pub reject: bool,
}

/// One-sample t-test of the hypothesis that the sample mean exceeds `mu0`,
/// one-sided, at one of the tabulated confidence levels.
pub fn one_sample_ttest(samples: &[f64], mu0: f64, confidence: f64) -> Result<TTestOutcome> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Stats(format!("need at least 2 samples, got {n}")));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        return Err(Error::Stats("zero sample variance".into()));
    }
    let t = (mean - mu0) / (var.sqrt() / (n as f64).sqrt());
    let df = n - 1;
    let critical = critical_value(df, confidence)?;
    Ok(TTestOutcome {
        t,
        df,
        critical,
        reject: t > critical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_samples_error_zero_variance() {
        assert!(one_sample_ttest(&[1.0, 1.0, 1.0], 1.0, 0.9975).is_err());
        assert!(one_sample_ttest(&[1.0], 0.0, 0.9975).is_err());
    }

    #[test]
    fn zero_t_never_rejects() {
        let out = one_sample_ttest(&[-1.0, 0.0, 1.0], 0.0, 0.9975).unwrap();
        assert!(out.t.abs() < 1e-12);
        assert!(!out.reject);
    }

    #[test]
    fn hand_computed_example() {
        // mean 1.2, s = 0.1, t = 1.2 / (0.1 / sqrt(3)) = 20.78
        let out = one_sample_ttest(&[1.1, 1.2, 1.3], 0.0, 0.9975).unwrap();
        assert!((out.t - 20.7846).abs() < 1e-3, "t = {}", out.t);
        assert_eq!(out.df, 2);
        assert!((out.critical - 14.089047).abs() < 1e-5);
        assert!(out.reject);
    }

    #[test]
    fn unsupported_confidence_is_an_error() {
        assert!(one_sample_ttest(&[1.0, 2.0, 3.0], 0.0, 0.123).is_err());
    }

    #[test]
    fn large_df_uses_normal_approximation() {
        let samples: Vec<f64> = (0..300).map(|i| (i % 7) as f64).collect();
        let out = one_sample_ttest(&samples, 2.0, 0.95).unwrap();
        assert_eq!(out.critical, 1.644854);
    }

    #[test]
    fn monte_carlo_false_rejection_rate() {
        // Paired-difference workflow on equal-mean data: 21 samples per
        // trial, mu0 = 0, confidence 0.9975. The one-sided false-rejection
        // rate must stay at or below 1%.
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let trials = 4000;
        let mut rejections = 0;
        for _ in 0..trials {
            let samples: Vec<f64> = (0..21)
                .map(|_| {
                    // difference of two same-mean quarterly statistics
                    let a: f64 = rng.gen::<f64>();
                    let b: f64 = rng.gen::<f64>();
                    a - b
                })
                .collect();
            if one_sample_ttest(&samples, 0.0, 0.9975).unwrap().reject {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / trials as f64;
        assert!(rate <= 0.01, "false rejection rate {rate}");
    }
}
