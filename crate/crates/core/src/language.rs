//! Template referring expressions, whitespace tokenization and the
//! part-of-speech masking used by the text ablations.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::world::catalog::{
    category_name, COLORS, FIXTURE_CATEGORIES, MATERIALS, ROOM_KINDS, SIZES, TARGET_CATEGORIES,
};
use crate::world::{Environment, ObjectId};
use crate::{rng_from_seed, Error, Result};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
const PAD_TOKEN: &str = "<pad>";
const UNK_TOKEN: &str = "<unk>";

/// Longest instruction, in tokens, that generation will emit.
pub const MAX_INSTRUCTION_TOKENS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PosTag {
    Noun,
    Adj,
    Prep,
    Room,
    Other,
}

impl PosTag {
    fn is_nominal(self) -> bool {
        matches!(self, PosTag::Noun | PosTag::Room)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub tokens: Vec<u32>,
    pub text: String,
    pub pos_tags: Vec<PosTag>,
    /// Tokens before this index form the leading room clause ("go to the kitchen").
    pub room_clause_end: usize,
}

impl Instruction {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn unknown() -> Self {
        Instruction {
            tokens: vec![UNK],
            text: UNK_TOKEN.into(),
            pos_tags: vec![PosTag::Other],
            room_clause_end: 0,
        }
    }
}

/// Token <-> id bijection with `PAD = 0` and `UNK = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "BTreeMap<String, u32>", try_from = "BTreeMap<String, u32>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: u32) -> &str {
        self.tokens
            .get(id as usize)
            .map_or(UNK_TOKEN, String::as_str)
    }

    fn push(&mut self, token: &str) {
        if !self.index.contains_key(token) {
            self.index
                .insert(token.to_string(), self.tokens.len() as u32);
            self.tokens.push(token.to_string());
        }
    }

    /// Every word the standard templates and catalog can produce.
    pub fn standard() -> Self {
        let mut corpus: Vec<String> = TemplateSet::standard_templates()
            .iter()
            .flat_map(|t| t.slots.iter())
            .filter_map(|s| match s {
                Slot::Word(w, _) => Some(w.to_string()),
                _ => None,
            })
            .collect();
        corpus.extend(["near", "the"].map(String::from));
        let catalog = ROOM_KINDS
            .iter()
            .chain(&TARGET_CATEGORIES)
            .chain(&FIXTURE_CATEGORIES)
            .chain(&SIZES)
            .chain(&COLORS)
            .chain(&MATERIALS);
        corpus.extend(catalog.map(|w| w.to_string()));
        build_vocabulary(corpus.iter().map(String::as_str))
    }
}

impl From<Vocabulary> for BTreeMap<String, u32> {
    fn from(v: Vocabulary) -> Self {
        v.index
    }
}

impl TryFrom<BTreeMap<String, u32>> for Vocabulary {
    type Error = String;

    fn try_from(map: BTreeMap<String, u32>) -> core::result::Result<Self, String> {
        let mut tokens = vec![String::new(); map.len()];
        for (tok, &id) in &map {
            match tokens.get_mut(id as usize) {
                Some(slot) if slot.is_empty() => *slot = tok.clone(),
                _ => {
                    return Err(alloc::format!(
                        "vocabulary ids are not a bijection onto 0..{}",
                        map.len()
                    ))
                }
            }
        }
        if tokens.first().map(String::as_str) != Some(PAD_TOKEN)
            || tokens.get(1).map(String::as_str) != Some(UNK_TOKEN)
        {
            return Err("vocabulary must map <pad> to 0 and <unk> to 1".into());
        }
        Ok(Vocabulary { tokens, index: map })
    }
}

/// Builds a vocabulary from a corpus in first-occurrence order.
pub fn build_vocabulary<'a>(corpus: impl IntoIterator<Item = &'a str>) -> Vocabulary {
    let mut vocab = Vocabulary {
        tokens: Vec::new(),
        index: BTreeMap::new(),
    };
    vocab.push(PAD_TOKEN);
    vocab.push(UNK_TOKEN);
    for sentence in corpus {
        for word in sentence.split_whitespace() {
            vocab.push(&word.to_lowercase());
        }
    }
    vocab
}

/// Lowercased whitespace tokenization; out-of-vocabulary words map to UNK and
/// an empty text becomes a single UNK.
pub fn tokenize(text: &str, vocab: &Vocabulary) -> Vec<u32> {
    let ids: Vec<u32> = text
        .split_whitespace()
        .map(|w| vocab.id(&w.to_lowercase()))
        .collect();
    if ids.is_empty() {
        vec![UNK]
    } else {
        ids
    }
}

pub fn detokenize(ids: &[u32], vocab: &Vocabulary) -> String {
    let words: Vec<&str> = ids.iter().map(|&id| vocab.token(id)).collect();
    words.join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Word(&'static str, PosTag),
    Room,
    Adjectives,
    Category,
    /// "near the <anchor>"; templates using it need an anchor object.
    Anchor,
    /// Marks the end of the leading room clause.
    RoomClauseEnd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub slots: Vec<Slot>,
}

impl Template {
    fn needs_anchor(&self) -> bool {
        self.slots.contains(&Slot::Anchor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub templates: Vec<Template>,
    pub vocab: Vocabulary,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet::standard()
    }
}

impl TemplateSet {
    pub fn standard() -> Self {
        TemplateSet {
            templates: Self::standard_templates(),
            vocab: Vocabulary::standard(),
        }
    }

    fn standard_templates() -> Vec<Template> {
        use PosTag::{Other as O, Prep as P};
        use Slot::*;
        let go_to_the = [Word("go", O), Word("to", P), Word("the", O)];
        let t = |parts: &[&[Slot]]| Template {
            slots: parts.concat(),
        };
        vec![
            t(&[
                &go_to_the,
                &[
                    Room,
                    RoomClauseEnd,
                    Word("and", O),
                    Word("find", O),
                    Word("the", O),
                    Adjectives,
                    Category,
                ],
            ]),
            t(&[
                &go_to_the,
                &[
                    Room,
                    RoomClauseEnd,
                    Word("and", O),
                    Word("pick", O),
                    Word("the", O),
                    Adjectives,
                    Category,
                    Anchor,
                ],
            ]),
            t(&[&[
                Word("walk", O),
                Word("into", P),
                Word("the", O),
                Room,
                RoomClauseEnd,
                Word("and", O),
                Word("locate", O),
                Word("the", O),
                Adjectives,
                Category,
            ]]),
            t(&[&[
                Word("enter", O),
                Word("the", O),
                Room,
                RoomClauseEnd,
                Word("and", O),
                Word("touch", O),
                Word("the", O),
                Adjectives,
                Category,
                Anchor,
            ]]),
            t(&[&[
                Word("in", P),
                Word("the", O),
                Room,
                RoomClauseEnd,
                Word("look", O),
                Word("for", P),
                Word("the", O),
                Adjectives,
                Category,
            ]]),
            t(&[&[
                Word("find", O),
                Word("the", O),
                Adjectives,
                Category,
                Word("in", P),
                Word("the", O),
                Room,
            ]]),
            t(&[&[
                Word("locate", O),
                Word("the", O),
                Adjectives,
                Category,
                Anchor,
                Word("in", P),
                Word("the", O),
                Room,
            ]]),
            t(&[&[
                Word("bring", O),
                Word("me", O),
                Word("the", O),
                Adjectives,
                Category,
                Word("from", P),
                Word("the", O),
                Room,
            ]]),
        ]
    }
}

/// Fills `template` with concrete words.
pub fn instantiate(
    template: &Template,
    room: &str,
    adjectives: &[&str],
    noun: &str,
    anchor: Option<&str>,
    vocab: &Vocabulary,
) -> Instruction {
    let mut words: Vec<(&str, PosTag)> = Vec::new();
    let mut room_clause_end = 0;
    for slot in &template.slots {
        match *slot {
            Slot::Word(w, tag) => words.push((w, tag)),
            Slot::Room => words.push((room, PosTag::Room)),
            Slot::Adjectives => words.extend(adjectives.iter().map(|&a| (a, PosTag::Adj))),
            Slot::Category => words.push((noun, PosTag::Noun)),
            Slot::Anchor => {
                if let Some(a) = anchor {
                    words.extend([
                        ("near", PosTag::Prep),
                        ("the", PosTag::Other),
                        (a, PosTag::Noun),
                    ]);
                }
            }
            Slot::RoomClauseEnd => room_clause_end = words.len(),
        }
    }
    words.truncate(MAX_INSTRUCTION_TOKENS);
    let text = words.iter().map(|(w, _)| *w).collect::<Vec<_>>().join(" ");
    Instruction {
        tokens: tokenize(&text, vocab),
        pos_tags: words.iter().map(|(_, t)| *t).collect(),
        room_clause_end: room_clause_end.min(words.len()),
        text,
    }
}

/// Referring expression for `target`: its room, its category noun, zero to two
/// adjectives (size, color, material in that order) and, for some templates,
/// one of the room's fixtures as a landmark.
pub fn generate_instruction(
    env: &Environment,
    target: ObjectId,
    seed: u64,
    templates: &TemplateSet,
) -> Result<Instruction> {
    if templates.templates.is_empty() {
        return Err(Error::EmptyTemplateSet);
    }
    let obj = env.object(target)?;
    let mut rng = rng_from_seed(seed);
    let anchor = obj.attributes.anchor.map(category_name);
    let usable: Vec<&Template> = templates
        .templates
        .iter()
        .filter(|t| anchor.is_some() || !t.needs_anchor())
        .collect();
    let template = if usable.is_empty() {
        &templates.templates[rng.random_range(0..templates.templates.len())]
    } else {
        *usable.choose(&mut rng).expect("non-empty")
    };
    let n_adj = rng.random_range(0..=2);
    let mut kinds = [0usize, 1, 2];
    for i in 0..n_adj {
        let j = rng.random_range(i..3);
        kinds.swap(i, j);
    }
    let mut chosen = kinds[..n_adj].to_vec();
    chosen.sort_unstable();
    let a = &obj.attributes;
    let adjectives: Vec<&str> = chosen
        .iter()
        .map(|&k| match k {
            0 => SIZES[a.size as usize],
            1 => COLORS[a.color as usize],
            _ => MATERIALS[a.material as usize],
        })
        .collect();
    let room = ROOM_KINDS[env.room_kind(obj.room_id) as usize];
    Ok(instantiate(
        template,
        room,
        &adjectives,
        category_name(obj.category),
        anchor,
        &templates.vocab,
    ))
}

/// Which parts of an instruction survive a text ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum TextMode {
    #[default]
    FullText,
    NoAdjectives,
    OnlyAdjNouns,
    OnlyNouns,
    NoRoom,
    OnlyRoom,
    NoNouns,
}

impl TextMode {
    pub const ALL: [TextMode; 7] = [
        TextMode::FullText,
        TextMode::NoAdjectives,
        TextMode::OnlyAdjNouns,
        TextMode::OnlyNouns,
        TextMode::NoRoom,
        TextMode::OnlyRoom,
        TextMode::NoNouns,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TextMode::FullText => "Full Text",
            TextMode::NoAdjectives => "No Adjectives",
            TextMode::OnlyAdjNouns => "Only Adj & Nouns",
            TextMode::OnlyNouns => "Only Nouns",
            TextMode::NoRoom => "No Room",
            TextMode::OnlyRoom => "Only Room",
            TextMode::NoNouns => "No Nouns",
        }
    }

    fn keeps(self, index: usize, tag: PosTag, room_clause_end: usize) -> bool {
        match self {
            TextMode::FullText => true,
            TextMode::NoAdjectives => tag != PosTag::Adj,
            TextMode::OnlyAdjNouns => tag == PosTag::Adj || tag.is_nominal(),
            TextMode::OnlyNouns => tag.is_nominal(),
            TextMode::NoNouns => !tag.is_nominal(),
            TextMode::NoRoom => index >= room_clause_end && tag != PosTag::Room,
            TextMode::OnlyRoom => index < room_clause_end || tag == PosTag::Room,
        }
    }
}

/// Filters tokens by tag (or room-clause position) according to `mode`.
///
/// The room clause is the prefix before `room_clause_end`; in object-first
/// phrasings it is empty and the room noun is located by its tag. An empty
/// result falls back to a single UNK.
pub fn mask_instruction(instr: &Instruction, mode: TextMode) -> Instruction {
    if mode == TextMode::FullText {
        return instr.clone();
    }
    let mut out = Instruction {
        tokens: Vec::new(),
        text: String::new(),
        pos_tags: Vec::new(),
        room_clause_end: 0,
    };
    let mut words: Vec<&str> = Vec::new();
    for (i, (word, (&tok, &tag))) in instr
        .text
        .split_whitespace()
        .zip(instr.tokens.iter().zip(&instr.pos_tags))
        .enumerate()
    {
        if mode.keeps(i, tag, instr.room_clause_end) {
            out.tokens.push(tok);
            out.pos_tags.push(tag);
            words.push(word);
            if i < instr.room_clause_end {
                out.room_clause_end += 1;
            }
        }
    }
    if out.tokens.is_empty() {
        return Instruction::unknown();
    }
    out.text = words.join(" ");
    out
}
