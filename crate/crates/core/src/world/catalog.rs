//! Fixed vocabulary of room kinds, object categories and attribute values.
//!
//! Target categories are what instructions refer to; fixtures are room-typical
//! furniture that only ever shows up as clutter and carries the room signal.

pub const ROOM_KINDS: [&str; 6] = [
    "kitchen", "bedroom", "bathroom", "lounge", "office", "hallway",
];

pub const TARGET_CATEGORIES: [&str; 12] = [
    "mug", "lamp", "chair", "plant", "vase", "pillow", "towel", "book", "bottle", "clock",
    "picture", "basket",
];

pub const FIXTURE_CATEGORIES: [&str; 12] = [
    "stove",
    "fridge",
    "bed",
    "wardrobe",
    "toilet",
    "bathtub",
    "sofa",
    "fireplace",
    "desk",
    "bookshelf",
    "bench",
    "doormat",
];

pub const COLORS: [&str; 8] = [
    "red", "blue", "green", "yellow", "white", "black", "brown", "gray",
];

pub const SIZES: [&str; 3] = ["small", "medium", "large"];

pub const MATERIALS: [&str; 4] = ["wooden", "metal", "glass", "plastic"];

/// Total number of categories; fixtures follow targets in the index space.
pub const N_CATEGORIES: usize = TARGET_CATEGORIES.len() + FIXTURE_CATEGORIES.len();

/// Width of a region feature vector: category, color, material and
/// surrounding-room one-hots.
pub const FEATURE_DIM: usize = N_CATEGORIES + COLORS.len() + MATERIALS.len() + ROOM_KINDS.len();

/// Target categories each room kind favours (indices into `TARGET_CATEGORIES`).
pub const ROOM_TARGETS: [[u32; 4]; 6] = [
    [0, 8, 3, 9],   // kitchen: mug, bottle, plant, clock
    [5, 1, 7, 10],  // bedroom: pillow, lamp, book, picture
    [6, 8, 11, 4],  // bathroom: towel, bottle, basket, vase
    [2, 4, 3, 10],  // lounge: chair, vase, plant, picture
    [7, 1, 2, 9],   // office: book, lamp, chair, clock
    [11, 10, 3, 2], // hallway: basket, picture, plant, chair
];

/// Fixture categories per room kind, as indices into the full category space.
pub const ROOM_FIXTURES: [[u32; 2]; 6] = [
    [12, 13], // stove, fridge
    [14, 15], // bed, wardrobe
    [16, 17], // toilet, bathtub
    [18, 19], // sofa, fireplace
    [20, 21], // desk, bookshelf
    [22, 23], // bench, doormat
];

/// Half-extent range (meters, per axis) for each size class.
pub const SIZE_HALF_EXTENTS: [(f64, f64); 3] = [(0.10, 0.18), (0.22, 0.32), (0.42, 0.60)];

pub fn category_name(category: u32) -> &'static str {
    let c = category as usize;
    if c < TARGET_CATEGORIES.len() {
        TARGET_CATEGORIES[c]
    } else {
        FIXTURE_CATEGORIES[c - TARGET_CATEGORIES.len()]
    }
}
