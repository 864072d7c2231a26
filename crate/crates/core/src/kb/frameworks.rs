use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemaPatternKind {
    Temporal,
    Categorical,
    Numerical,
    Relationship,
    DataQuality,
    Transformation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaPatternSpec {
    pub kind: SchemaPatternKind,
    pub checks: &'static [&'static str],
}

const PATTERNS: [SchemaPatternSpec; 6] = [
    SchemaPatternSpec {
        kind: SchemaPatternKind::Temporal,
        checks: &[
            "date and time formats are parsed consistently",
            "aggregation windows match the period the question implies",
            "the comparison period is explicit",
        ],
    },
    SchemaPatternSpec {
        kind: SchemaPatternKind::Categorical,
        checks: &[
            "category labels are unambiguous (abbreviations vs full names)",
            "implicit hierarchies between categories are respected",
        ],
    },
    SchemaPatternSpec {
        kind: SchemaPatternKind::Numerical,
        checks: &[
            "average vs median matches the intended summary",
            "outliers are handled or at least surfaced",
            "units and scales are consistent",
        ],
    },
    SchemaPatternSpec {
        kind: SchemaPatternKind::Relationship,
        checks: &[
            "join paths between tables are the intended ones",
            "functional dependencies assumed by the question hold",
        ],
    },
    SchemaPatternSpec {
        kind: SchemaPatternKind::DataQuality,
        checks: &[
            "missing values are counted and treated deliberately",
            "inconsistent values such as negative counts are detected",
        ],
    },
    SchemaPatternSpec {
        kind: SchemaPatternKind::Transformation,
        checks: &[
            "normalization (per capita, per account) is applied where comparisons need it",
            "discretization thresholds are justified",
            "grouping level suits the decision",
        ],
    },
];

pub fn schema_patterns() -> &'static [SchemaPatternSpec] {
    &PATTERNS
}

/// A rating from 1 to 5 with a short justification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToulminComponent {
    pub rating: u8,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToulminAssessment {
    pub claim: ToulminComponent,
    pub evidence: ToulminComponent,
    pub warrant: ToulminComponent,
    pub backing: ToulminComponent,
    pub qualifier: ToulminComponent,
    pub rebuttal: ToulminComponent,
}

impl ToulminAssessment {
    pub const COMPONENTS: [&'static str; 6] =
        ["claim", "evidence", "warrant", "backing", "qualifier", "rebuttal"];

    pub fn components(&self) -> [(&'static str, &ToulminComponent); 6] {
        [
            ("claim", &self.claim),
            ("evidence", &self.evidence),
            ("warrant", &self.warrant),
            ("backing", &self.backing),
            ("qualifier", &self.qualifier),
            ("rebuttal", &self.rebuttal),
        ]
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, c) in self.components() {
            if !(1..=5).contains(&c.rating) {
                return Err(format!("toulmin {name} rating {} outside 1-5", c.rating));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CounterArgumentKind {
    ConclusionRebutter,
    PremiseRebutter,
    ArgumentUndercutter,
    FramingChallenge,
    ImplementationChallenge,
}

impl CounterArgumentKind {
    pub const ALL: [CounterArgumentKind; 5] = [
        CounterArgumentKind::ConclusionRebutter,
        CounterArgumentKind::PremiseRebutter,
        CounterArgumentKind::ArgumentUndercutter,
        CounterArgumentKind::FramingChallenge,
        CounterArgumentKind::ImplementationChallenge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CounterArgumentKind::ConclusionRebutter => "conclusion-rebutter",
            CounterArgumentKind::PremiseRebutter => "premise-rebutter",
            CounterArgumentKind::ArgumentUndercutter => "argument-undercutter",
            CounterArgumentKind::FramingChallenge => "framing-challenge",
            CounterArgumentKind::ImplementationChallenge => "implementation-challenge",
        }
    }

    /// Probe wording used when instructing the model.
    pub fn probe(self) -> &'static str {
        match self {
            CounterArgumentKind::ConclusionRebutter => {
                "Would a scope limitation or an alternative query lead to a different conclusion?"
            }
            CounterArgumentKind::PremiseRebutter => {
                "Does the question rely on incomplete, missing or non-representative data, or an unsuitable metric?"
            }
            CounterArgumentKind::ArgumentUndercutter => {
                "Are there hidden assumptions or confounders that explain the pattern instead?"
            }
            CounterArgumentKind::FramingChallenge => {
                "Is this the right question for the decision, at the right time frame and aggregation level?"
            }
            CounterArgumentKind::ImplementationChallenge => {
                "Does the data suggest feasibility problems or unintended consequences of acting on the answer?"
            }
        }
    }
}

impl fmt::Display for CounterArgumentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CounterArgumentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown counter-argument kind '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterArgument {
    pub kind: CounterArgumentKind,
    pub text: String,
}

impl CounterArgument {
    pub fn validate(&self) -> Result<(), String> {
        if self.text.trim().is_empty() {
            Err(format!("{} counter-argument has empty text", self.kind))
        } else {
            Ok(())
        }
    }
}
