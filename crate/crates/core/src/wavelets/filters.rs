use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::WavePlanesError;

/// Wavelet families with embedded filter banks.
///
/// Coefficients are the standard published decomposition/reconstruction
/// tables. Analysis filters are stored in convolution order, so the forward
/// transform correlates with their reversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletFamily {
    Haar,
    Db2,
    Db6,
    Coif2,
    #[serde(rename = "bior1.3")]
    Bior13,
    #[serde(rename = "bior4.4")]
    Bior44,
}

#[derive(Debug, Clone, Copy)]
pub struct FilterBank {
    pub analysis_low: &'static [f64],
    pub analysis_high: &'static [f64],
    pub synthesis_low: &'static [f64],
    pub synthesis_high: &'static [f64],
}

impl WaveletFamily {
    pub const ALL: [WaveletFamily; 6] = [
        WaveletFamily::Haar,
        WaveletFamily::Db2,
        WaveletFamily::Db6,
        WaveletFamily::Coif2,
        WaveletFamily::Bior13,
        WaveletFamily::Bior44,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WaveletFamily::Haar => "haar",
            WaveletFamily::Db2 => "db2",
            WaveletFamily::Db6 => "db6",
            WaveletFamily::Coif2 => "coif2",
            WaveletFamily::Bior13 => "bior1.3",
            WaveletFamily::Bior44 => "bior4.4",
        }
    }

    /// Stable one-byte identifier used by the model container.
    pub fn id(self) -> u8 {
        match self {
            WaveletFamily::Haar => 0,
            WaveletFamily::Db2 => 1,
            WaveletFamily::Db6 => 2,
            WaveletFamily::Coif2 => 3,
            WaveletFamily::Bior13 => 4,
            WaveletFamily::Bior44 => 5,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.id() == id)
    }

    pub fn is_orthogonal(self) -> bool {
        !matches!(self, WaveletFamily::Bior13 | WaveletFamily::Bior44)
    }

    pub fn filters(self) -> FilterBank {
        match self {
            WaveletFamily::Haar => FilterBank {
                analysis_low: &HAAR_DEC_LO,
                analysis_high: &HAAR_DEC_HI,
                synthesis_low: &HAAR_REC_LO,
                synthesis_high: &HAAR_REC_HI,
            },
            WaveletFamily::Db2 => FilterBank {
                analysis_low: &DB2_DEC_LO,
                analysis_high: &DB2_DEC_HI,
                synthesis_low: &DB2_REC_LO,
                synthesis_high: &DB2_REC_HI,
            },
            WaveletFamily::Db6 => FilterBank {
                analysis_low: &DB6_DEC_LO,
                analysis_high: &DB6_DEC_HI,
                synthesis_low: &DB6_REC_LO,
                synthesis_high: &DB6_REC_HI,
            },
            WaveletFamily::Coif2 => FilterBank {
                analysis_low: &COIF2_DEC_LO,
                analysis_high: &COIF2_DEC_HI,
                synthesis_low: &COIF2_REC_LO,
                synthesis_high: &COIF2_REC_HI,
            },
            WaveletFamily::Bior13 => FilterBank {
                analysis_low: &BIOR13_DEC_LO,
                analysis_high: &BIOR13_DEC_HI,
                synthesis_low: &BIOR13_REC_LO,
                synthesis_high: &BIOR13_REC_HI,
            },
            WaveletFamily::Bior44 => FilterBank {
                analysis_low: &BIOR44_DEC_LO,
                analysis_high: &BIOR44_DEC_HI,
                synthesis_low: &BIOR44_REC_LO,
                synthesis_high: &BIOR44_REC_HI,
            },
        }
    }
}

impl fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveletFamily {
    type Err = WavePlanesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| WavePlanesError::Config(format!("unknown wavelet family '{s}'")))
    }
}

const R2: f64 = 0.7071067811865476;

const HAAR_DEC_LO: [f64; 2] = [R2, R2];
const HAAR_DEC_HI: [f64; 2] = [-R2, R2];
const HAAR_REC_LO: [f64; 2] = [R2, R2];
const HAAR_REC_HI: [f64; 2] = [R2, -R2];

const DB2_DEC_LO: [f64; 4] = [
    -0.12940952255126037,
    0.2241438680420134,
    0.8365163037378079,
    0.48296291314453416,
];
const DB2_DEC_HI: [f64; 4] = [
    -0.48296291314453416,
    0.8365163037378079,
    -0.2241438680420134,
    -0.12940952255126037,
];
const DB2_REC_LO: [f64; 4] = [
    0.48296291314453416,
    0.8365163037378079,
    0.2241438680420134,
    -0.12940952255126037,
];
const DB2_REC_HI: [f64; 4] = [
    -0.12940952255126037,
    -0.2241438680420134,
    0.8365163037378079,
    -0.48296291314453416,
];

const DB6_DEC_LO: [f64; 12] = [
    -0.0010773010853084796,
    0.004777257510945511,
    0.0005538422011614961,
    -0.03158203931748603,
    0.027522865530305727,
    0.09750160558732304,
    -0.12976686756726194,
    -0.22626469396543983,
    0.31525035170919763,
    0.7511339080210954,
    0.49462389039845306,
    0.11154074335010947,
];
const DB6_DEC_HI: [f64; 12] = [
    -0.11154074335010947,
    0.49462389039845306,
    -0.7511339080210954,
    0.31525035170919763,
    0.22626469396543983,
    -0.12976686756726194,
    -0.09750160558732304,
    0.027522865530305727,
    0.03158203931748603,
    0.0005538422011614961,
    -0.004777257510945511,
    -0.0010773010853084796,
];
const DB6_REC_LO: [f64; 12] = [
    0.11154074335010947,
    0.49462389039845306,
    0.7511339080210954,
    0.31525035170919763,
    -0.22626469396543983,
    -0.12976686756726194,
    0.09750160558732304,
    0.027522865530305727,
    -0.03158203931748603,
    0.0005538422011614961,
    0.004777257510945511,
    -0.0010773010853084796,
];
const DB6_REC_HI: [f64; 12] = [
    -0.0010773010853084796,
    -0.004777257510945511,
    0.0005538422011614961,
    0.03158203931748603,
    0.027522865530305727,
    -0.09750160558732304,
    -0.12976686756726194,
    0.22626469396543983,
    0.31525035170919763,
    -0.7511339080210954,
    0.49462389039845306,
    -0.11154074335010947,
];

const COIF2_DEC_LO: [f64; 12] = [
    -0.000720549445520347,
    -0.0018232088709110323,
    0.005611434819368834,
    0.02368017194684777,
    -0.05943441864643109,
    -0.07648859907828076,
    0.4170051844232391,
    0.8127236354494135,
    0.3861100668227629,
    -0.0673725547237256,
    -0.04146493678687178,
    0.01638733646320364,
];
const COIF2_DEC_HI: [f64; 12] = [
    -0.01638733646320364,
    -0.04146493678687178,
    0.0673725547237256,
    0.3861100668227629,
    -0.8127236354494135,
    0.4170051844232391,
    0.07648859907828076,
    -0.05943441864643109,
    -0.02368017194684777,
    0.005611434819368834,
    0.0018232088709110323,
    -0.000720549445520347,
];
const COIF2_REC_LO: [f64; 12] = [
    0.01638733646320364,
    -0.04146493678687178,
    -0.0673725547237256,
    0.3861100668227629,
    0.8127236354494135,
    0.4170051844232391,
    -0.07648859907828076,
    -0.05943441864643109,
    0.02368017194684777,
    0.005611434819368834,
    -0.0018232088709110323,
    -0.000720549445520347,
];
const COIF2_REC_HI: [f64; 12] = [
    -0.000720549445520347,
    0.0018232088709110323,
    0.005611434819368834,
    -0.02368017194684777,
    -0.05943441864643109,
    0.07648859907828076,
    0.4170051844232391,
    -0.8127236354494135,
    0.3861100668227629,
    0.0673725547237256,
    -0.04146493678687178,
    -0.01638733646320364,
];

const B13_A: f64 = 0.08838834764831845;

const BIOR13_DEC_LO: [f64; 6] = [-B13_A, B13_A, R2, R2, B13_A, -B13_A];
const BIOR13_DEC_HI: [f64; 6] = [0.0, 0.0, -R2, R2, 0.0, 0.0];
const BIOR13_REC_LO: [f64; 6] = [0.0, 0.0, R2, R2, 0.0, 0.0];
const BIOR13_REC_HI: [f64; 6] = [-B13_A, -B13_A, R2, -R2, B13_A, B13_A];

const BIOR44_DEC_LO: [f64; 10] = [
    0.0,
    0.03782845550726404,
    -0.023849465019556843,
    -0.11062440441843718,
    0.37740285561283066,
    0.8526986790088938,
    0.37740285561283066,
    -0.11062440441843718,
    -0.023849465019556843,
    0.03782845550726404,
];
const BIOR44_DEC_HI: [f64; 10] = [
    0.0,
    -0.06453888262869706,
    0.04068941760916406,
    0.41809227322161724,
    -0.7884856164055829,
    0.41809227322161724,
    0.04068941760916406,
    -0.06453888262869706,
    0.0,
    0.0,
];
const BIOR44_REC_LO: [f64; 10] = [
    0.0,
    -0.06453888262869706,
    -0.04068941760916406,
    0.41809227322161724,
    0.7884856164055829,
    0.41809227322161724,
    -0.04068941760916406,
    -0.06453888262869706,
    0.0,
    0.0,
];
const BIOR44_REC_HI: [f64; 10] = [
    0.0,
    -0.03782845550726404,
    -0.023849465019556843,
    0.11062440441843718,
    0.37740285561283066,
    -0.8526986790088938,
    0.37740285561283066,
    0.11062440441843718,
    -0.023849465019556843,
    -0.03782845550726404,
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_synthesis_is_reversed_analysis() {
        for family in WaveletFamily::ALL.into_iter().filter(|f| f.is_orthogonal()) {
            let bank = family.filters();
            let reversed: Vec<f64> = bank.analysis_low.iter().rev().copied().collect();
            assert_eq!(reversed, bank.synthesis_low, "{family}");
            let reversed: Vec<f64> = bank.analysis_high.iter().rev().copied().collect();
            assert_eq!(reversed, bank.synthesis_high, "{family}");
        }
    }

    #[test]
    fn lowpass_sums_to_sqrt2() {
        for family in WaveletFamily::ALL {
            let sum: f64 = family.filters().synthesis_low.iter().sum();
            assert!((sum - 2f64.sqrt()).abs() < 1e-9, "{family}: {sum}");
        }
    }

    #[test]
    fn names_round_trip() {
        for family in WaveletFamily::ALL {
            assert_eq!(family.name().parse::<WaveletFamily>().unwrap(), family);
            assert_eq!(WaveletFamily::from_id(family.id()), Some(family));
        }
        assert!("db3".parse::<WaveletFamily>().is_err());
    }
}
