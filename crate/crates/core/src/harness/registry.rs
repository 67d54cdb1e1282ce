//! Published reference numbers for the supported news domains.

/// One news domain: split sizes, sentences extracted at test time, and the reported
/// Lead / Oracle ROUGE F1 (percent) and positional bias where known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainInfo {
    pub name: &'static str,
    pub k: usize,
    /// Train / valid / test document counts.
    pub splits: [usize; 3],
    pub lead: [f64; 3],
    pub oracle: [f64; 3],
    pub pos_bias: Option<f64>,
}

pub const DOMAINS: [DomainInfo; 8] = [
    DomainInfo {
        name: "CNN/DailyMail",
        k: 3,
        splits: [287_227, 13_368, 11_490],
        lead: [40.11, 17.64, 36.32],
        oracle: [55.24, 31.14, 50.96],
        pos_bias: None,
    },
    DomainInfo {
        name: "NYTimes",
        k: 2,
        splits: [152_981, 16_490, 16_624],
        lead: [28.75, 16.10, 25.16],
        oracle: [52.17, 36.10, 47.68],
        pos_bias: None,
    },
    DomainInfo {
        name: "WashingtonPost",
        k: 1,
        splits: [96_775, 10_103, 10_196],
        lead: [22.21, 11.40, 19.41],
        oracle: [42.91, 27.11, 39.42],
        pos_bias: Some(3.0),
    },
    DomainInfo {
        name: "FoxNews",
        k: 1,
        splits: [78_795, 8_428, 8_397],
        lead: [54.20, 46.60, 51.89],
        oracle: [73.54, 65.50, 71.46],
        pos_bias: Some(1.8),
    },
    DomainInfo {
        name: "TheGuardian",
        k: 1,
        splits: [58_057, 6_376, 6_273],
        lead: [22.51, 7.69, 17.78],
        oracle: [41.08, 21.49, 35.80],
        pos_bias: Some(2.9),
    },
    DomainInfo {
        name: "NYDailyNews",
        k: 1,
        splits: [55_653, 6_057, 5_904],
        lead: [45.26, 35.53, 42.70],
        oracle: [73.99, 64.80, 72.09],
        pos_bias: Some(1.9),
    },
    DomainInfo {
        name: "WSJ",
        k: 1,
        splits: [49_968, 5_449, 5_462],
        lead: [39.63, 27.72, 36.10],
        oracle: [57.15, 43.06, 53.27],
        pos_bias: None,
    },
    DomainInfo {
        name: "USAToday",
        k: 1,
        splits: [44_921, 4_628, 4_781],
        lead: [29.44, 18.92, 26.65],
        oracle: [47.17, 33.40, 44.02],
        pos_bias: None,
    },
];

fn squash(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Case- and punctuation-insensitive lookup; `cnndm` and `cnn` also find CNN/DailyMail.
pub fn lookup_domain(name: &str) -> Option<&'static DomainInfo> {
    let key = squash(name);
    let key = match key.as_str() {
        "cnndm" | "cnn" | "cnndailymail" => "cnndailymail".to_string(),
        _ => key,
    };
    DOMAINS.iter().find(|d| squash(d.name) == key)
}

/// Reference rows for the content/position mixing sweep on CNN/DailyMail, in table order.
pub const MIX_REFERENCE: [(&str, [f64; 3]); 5] = [
    ("1,0", [37.90, 15.69, 34.31]),
    ("sqrt_d,1", [40.93, 18.49, 37.24]),
    ("1,1", [41.31, 18.85, 37.63]),
    ("1,sqrt_d", [40.88, 18.42, 37.19]),
    ("0,1", [40.39, 17.67, 36.54]),
];

/// R-1 quoted in the running text for the position-only model; the table row (40.39) is
/// the one compared against.
pub const POSITION_ONLY_TEXT_R1: f64 = 40.08;
