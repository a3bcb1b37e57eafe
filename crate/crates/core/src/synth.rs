//! A small generative grammar for toy corpora and planted task instances.
//!
//! Every preposition frame pairs a set of verbs with a set of objects, so the
//! preposition a sentence needs is predictable from its context. Selection
//! errors swap the right preposition for a fixed confuser; attachment
//! instances put the gold head nearest to the preposition for an exact,
//! chosen share of instances.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attach::{AttachmentInstance, HeadCandidate};
use crate::select::SelectionInstance;

pub struct Frame {
    pub prep: &'static str,
    pub confuser: &'static str,
    pub verbs: &'static [&'static str],
    pub objects: &'static [&'static str],
}

pub const FRAMES: &[Frame] = &[
    Frame {
        prep: "in",
        confuser: "on",
        verbs: &["lived", "worked", "stayed", "settled"],
        objects: &["city", "village", "house", "country"],
    },
    Frame {
        prep: "on",
        confuser: "in",
        verbs: &["sat", "stood", "leaned", "perched"],
        objects: &["table", "roof", "bench", "shelf"],
    },
    Frame {
        prep: "at",
        confuser: "in",
        verbs: &["arrived", "waited", "stared", "knocked"],
        objects: &["station", "airport", "door", "window"],
    },
    Frame {
        prep: "to",
        confuser: "for",
        verbs: &["went", "walked", "travelled", "drove"],
        objects: &["market", "school", "office", "coast"],
    },
    Frame {
        prep: "for",
        confuser: "to",
        verbs: &["searched", "hunted", "begged", "prayed"],
        objects: &["treasure", "food", "help", "rain"],
    },
    Frame {
        prep: "from",
        confuser: "of",
        verbs: &["escaped", "returned", "fled", "emerged"],
        objects: &["prison", "battle", "island", "cave"],
    },
    Frame {
        prep: "of",
        confuser: "from",
        verbs: &["thought", "dreamed", "spoke", "despaired"],
        objects: &["home", "freedom", "summer", "glory"],
    },
    Frame {
        prep: "with",
        confuser: "by",
        verbs: &["argued", "played", "quarrelled", "danced"],
        objects: &["friend", "neighbour", "brother", "rival"],
    },
    Frame {
        prep: "about",
        confuser: "of",
        verbs: &["worried", "cared", "wrote", "laughed"],
        objects: &["money", "health", "weather", "politics"],
    },
    Frame {
        prep: "under",
        confuser: "below",
        verbs: &["hid", "crawled", "sheltered", "huddled"],
        objects: &["bridge", "blanket", "tree", "stairs"],
    },
    Frame {
        prep: "over",
        confuser: "above",
        verbs: &["jumped", "leapt", "vaulted", "stepped"],
        objects: &["fence", "wall", "puddle", "hedge"],
    },
    Frame {
        prep: "into",
        confuser: "in",
        verbs: &["ran", "crashed", "dived", "plunged"],
        objects: &["lake", "crowd", "tunnel", "pool"],
    },
    Frame {
        prep: "through",
        confuser: "across",
        verbs: &["wandered", "drifted", "marched", "trudged"],
        objects: &["forest", "desert", "valley", "storm"],
    },
    Frame {
        prep: "during",
        confuser: "in",
        verbs: &["yawned", "coughed", "whispered", "fainted"],
        objects: &["lecture", "concert", "meeting", "ceremony"],
    },
    Frame {
        prep: "by",
        confuser: "with",
        verbs: &["paused", "lingered", "camped", "loitered"],
        objects: &["shore", "roadside", "fire", "gate"],
    },
    Frame {
        prep: "against",
        confuser: "with",
        verbs: &["protested", "campaigned", "rebelled", "voted"],
        objects: &["tax", "law", "king", "plan"],
    },
];

pub const AGENTS: &[&str] = &[
    "man", "woman", "child", "soldier", "farmer", "teacher", "doctor", "sailor", "girl", "boy",
];
const TAILS: &[&str] = &[
    "yesterday",
    "today",
    "again",
    "quietly",
    "often",
    "alone",
    "slowly",
    "happily",
];
const TRANSITIVE: &[&str] = &["saw", "liked", "painted", "built", "found", "cleaned", "sold", "bought"];
const THINGS: &[&str] = &["bread", "lock", "crate", "chair", "parcel", "rope"];
const INSTRUMENTS: &[&str] = &["knife", "hammer", "key", "axe", "spoon", "brush"];
const ATTRIBUTES: &[&str] = &["stripes", "spots", "handles", "wheels", "ribbons", "patches"];
const TOOL_VERBS: &[&str] = &["cut", "opened", "fixed", "broke", "tapped", "scraped"];

/// `(head, preposition, one-word paraphrase)` triples planted in the corpus:
/// the phrasal verb and its paraphrase share subjects and objects.
pub const PHRASAL_PARAPHRASES: &[(&str, &str, &str)] = &[
    ("sparked", "off", "prompted"),
    ("handed", "over", "delivered"),
    ("went", "through", "endured"),
];
const EVENTS: &[&str] = &["scandal", "speech", "crisis", "rumour"];
const REACTIONS: &[&str] = &["outrage", "debate", "panic", "inquiry"];
const GOODS: &[&str] = &["keys", "documents", "evidence", "gifts"];
const HARDSHIPS: &[&str] = &["hardship", "grief", "illness", "famine"];

fn pick<'a>(rng: &mut ChaCha8Rng, words: &[&'a str]) -> &'a str {
    words.choose(rng).expect("nonempty word list")
}

/// A frame sentence: `the AGENT VERB PREP the OBJECT TAIL`, as tokens with the
/// preposition's position.
fn frame_sentence(rng: &mut ChaCha8Rng, f: &Frame) -> (Vec<String>, usize) {
    let mut t = vec![
        "the",
        pick(rng, AGENTS),
        pick(rng, f.verbs),
        f.prep,
        "the",
        pick(rng, f.objects),
    ];
    if rng.random_bool(0.6) {
        t.push(pick(rng, TAILS));
    }
    (t.into_iter().map(str::to_string).collect(), 3)
}

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let kind = rng.random_range(0..100);
    let words: Vec<String> = if kind < 60 {
        let f = FRAMES.choose(rng).expect("frames");
        frame_sentence(rng, f).0
    } else if kind < 70 {
        // a stray preposition between a frame verb and an unrelated object
        let f = FRAMES.choose(rng).expect("frames");
        let g = FRAMES.choose(rng).expect("frames");
        [
            "the",
            pick(rng, AGENTS),
            pick(rng, f.verbs),
            g.prep,
            "the",
            pick(rng, g.objects),
        ]
        .map(str::to_string)
        .to_vec()
    } else if kind < 78 {
        [
            "the",
            pick(rng, AGENTS),
            pick(rng, TRANSITIVE),
            "the",
            pick(rng, THINGS),
            pick(rng, TAILS),
        ]
        .map(str::to_string)
        .to_vec()
    } else if kind < 86 {
        [
            "the",
            pick(rng, AGENTS),
            pick(rng, TOOL_VERBS),
            "the",
            pick(rng, THINGS),
            "with",
            "the",
            pick(rng, INSTRUMENTS),
        ]
        .map(str::to_string)
        .to_vec()
    } else if kind < 94 {
        [
            "the",
            pick(rng, AGENTS),
            pick(rng, TRANSITIVE),
            "the",
            pick(rng, THINGS),
            "with",
            pick(rng, ATTRIBUTES),
        ]
        .map(str::to_string)
        .to_vec()
    } else {
        let (head, prep, para) = *PHRASAL_PARAPHRASES.choose(rng).expect("pairs");
        let (subjects, objects) = match para {
            "prompted" => (EVENTS, REACTIONS),
            "delivered" => (AGENTS, GOODS),
            _ => (AGENTS, HARDSHIPS),
        };
        let subject = pick(rng, subjects);
        let object = pick(rng, objects);
        if rng.random_bool(0.5) {
            ["the", subject, head, prep, "the", object].map(str::to_string).to_vec()
        } else {
            ["the", subject, para, "the", object].map(str::to_string).to_vec()
        }
    };
    let mut s = words.join(" ");
    s.push_str(" .");
    s
}

/// `sentences` lines of toy text, one sentence per line.
pub fn toy_corpus(sentences: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for _ in 0..sentences {
        out.push_str(&sentence(&mut rng));
        out.push('\n');
    }
    out
}

/// `n` frame sentences; a `error_rate` share has the frame's preposition
/// replaced by its confuser.
pub fn synthetic_selection_instances(n: usize, error_rate: f64, seed: u64) -> Vec<SelectionInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let errors = (n as f64 * error_rate).round() as usize;
    let mut plan: Vec<bool> = (0..n).map(|i| i < errors).collect();
    plan.shuffle(&mut rng);
    plan.into_iter()
        .map(|is_error| {
            let f = FRAMES.choose(&mut rng).expect("frames");
            let (mut tokens, prep_index) = frame_sentence(&mut rng, f);
            let observed = if is_error { f.confuser } else { f.prep };
            tokens[prep_index] = observed.to_string();
            SelectionInstance {
                tokens,
                prep_index,
                observed: observed.to_string(),
                gold: f.prep.to_string(),
            }
        })
        .collect()
}

/// `n` `with`-attachment instances. The nearest candidate (the object noun)
/// is gold exactly for `round(n * nearest_fraction)` instances, those whose
/// child is an attribute; instrument children attach to the verb.
pub fn synthetic_attachment_instances(n: usize, nearest_fraction: f64, seed: u64) -> Vec<AttachmentInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nearest = (n as f64 * nearest_fraction).round() as usize;
    let mut plan: Vec<bool> = (0..n).map(|i| i < nearest).collect();
    plan.shuffle(&mut rng);
    plan.into_iter()
        .map(|noun_attached| {
            let (verb, child) = if noun_attached {
                (pick(&mut rng, TRANSITIVE), pick(&mut rng, ATTRIBUTES))
            } else {
                (pick(&mut rng, TOOL_VERBS), pick(&mut rng, INSTRUMENTS))
            };
            let thing = pick(&mut rng, THINGS);
            let mut candidates = vec![
                HeadCandidate {
                    token: verb.into(),
                    pos: "VBD".into(),
                    next_pos: "DT".into(),
                    distance: 3,
                },
                HeadCandidate {
                    token: thing.into(),
                    pos: "NN".into(),
                    next_pos: "IN".into(),
                    distance: 1,
                },
            ];
            if rng.random_bool(0.5) {
                let agent = pick(&mut rng, AGENTS);
                candidates.insert(
                    0,
                    HeadCandidate {
                        token: agent.into(),
                        pos: "NN".into(),
                        next_pos: "VBD".into(),
                        distance: 4,
                    },
                );
            }
            let gold_index = candidates.len() - if noun_attached { 1 } else { 2 };
            AttachmentInstance {
                preposition: "with".into(),
                child: child.into(),
                gold_index,
                candidates,
            }
        })
        .collect()
}
