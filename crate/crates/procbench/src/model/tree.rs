//! Hierarchical process models built from sequence, choice, parallel, and
//! loop operators over activity leaves and silent steps.

use std::collections::BTreeSet;
use std::fmt;

use super::Activity;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProcessTree {
    /// Children execute left to right.
    Sequence(Vec<ProcessTree>),
    /// Exactly one child executes.
    Choice(Vec<ProcessTree>),
    /// Children execute concurrently; their traces interleave.
    Parallel(Vec<ProcessTree>),
    /// Do-part executes once, then zero or more rounds of (redo-part, do-part).
    Loop(Box<ProcessTree>, Box<ProcessTree>),
    Leaf(Activity),
    /// Silent step producing no activity.
    Silent,
}

impl ProcessTree {
    pub fn leaf(activity: Activity) -> Self {
        ProcessTree::Leaf(activity)
    }

    /// The set of activities appearing as leaves.
    pub fn alphabet(&self) -> BTreeSet<Activity> {
        let mut out = BTreeSet::new();
        self.collect_alphabet(&mut out);
        out
    }

    fn collect_alphabet(&self, out: &mut BTreeSet<Activity>) {
        match self {
            ProcessTree::Leaf(a) => {
                out.insert(a.clone());
            }
            ProcessTree::Silent => {}
            ProcessTree::Sequence(cs) | ProcessTree::Choice(cs) | ProcessTree::Parallel(cs) => {
                for c in cs {
                    c.collect_alphabet(out);
                }
            }
            ProcessTree::Loop(d, r) => {
                d.collect_alphabet(out);
                r.collect_alphabet(out);
            }
        }
    }

    /// Checks operator arity: sequence/choice/parallel need at least one
    /// child (loops are two-child by construction).
    pub fn is_well_formed(&self) -> bool {
        match self {
            ProcessTree::Leaf(_) | ProcessTree::Silent => true,
            ProcessTree::Sequence(cs) | ProcessTree::Choice(cs) | ProcessTree::Parallel(cs) => {
                !cs.is_empty() && cs.iter().all(ProcessTree::is_well_formed)
            }
            ProcessTree::Loop(d, r) => d.is_well_formed() && r.is_well_formed(),
        }
    }

    /// Canonical text form: `->( 'a', X( 'b', 'c' ) )`.
    pub fn serialize(&self) -> String {
        self.to_string()
    }
}

fn quote_label(label: &str, out: &mut String) {
    out.push('\'');
    for ch in label.chars() {
        if ch == '\'' || ch == '\\' {
            out.push('\\');
        }
        out.push(ch);
    }
    out.push('\'');
}

impl serde::Serialize for ProcessTree {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for ProcessTree {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        super::parse_tree(&text).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for ProcessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_children(f: &mut fmt::Formatter<'_>, op: &str, cs: &[ProcessTree]) -> fmt::Result {
            write!(f, "{op}( ")?;
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, " )")
        }

        match self {
            ProcessTree::Leaf(a) => {
                let mut s = String::new();
                quote_label(a.label(), &mut s);
                f.write_str(&s)
            }
            ProcessTree::Silent => f.write_str("tau"),
            ProcessTree::Sequence(cs) => write_children(f, "->", cs),
            ProcessTree::Choice(cs) => write_children(f, "X", cs),
            ProcessTree::Parallel(cs) => write_children(f, "+", cs),
            ProcessTree::Loop(d, r) => {
                write!(f, "*( {d}, {r} )")
            }
        }
    }
}
