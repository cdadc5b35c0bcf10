//! Room-type taxonomy shared by every stage of the pipeline.
//!
//! The eleven LSUN room types fall into three hypothesis groups by the number
//! of visible walls. Each group has a prototype type (both floor and ceiling
//! visible) whose keypoint table defines the group's ID space; the other types
//! of the group use a subset of those IDs, so IDs may be discontinuous.
//!
//! Canonical ID tables:
//!
//! | group | id | slot |
//! |-------|----|------|
//! | A | 1, 2 | upper end of the left / right wall-wall edge (ceiling junction, or top-border point without a ceiling) |
//! | A | 3, 4 | lower end of the left / right wall-wall edge (floor junction, or bottom-border point without a floor) |
//! | A | 5, 6 | left / right ceiling border exit |
//! | A | 7, 8 | left / right floor border exit |
//! | B | 1, 2 | upper / lower end of the wall-wall edge |
//! | B | 3, 4 | left / right ceiling border exit |
//! | B | 5, 6 | left / right floor border exit |
//! | C | 1, 2 | left / right end of the ceiling line |
//! | C | 3, 4 | left / right end of the floor line |
//!
//! These tables are one consistent realization of the prototype re-ordering;
//! only the type-4 assignment is pinned down by the original description.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-pixel semantic class. Numeric codes are fixed for every file format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    Void = 0,
    Floor = 1,
    Ceiling = 2,
    LeftWall = 3,
    CenterWall = 4,
    RightWall = 5,
}

impl Label {
    pub const SEMANTIC: [Label; 5] = [
        Label::Floor,
        Label::Ceiling,
        Label::LeftWall,
        Label::CenterWall,
        Label::RightWall,
    ];

    pub const WALLS: [Label; 3] = [Label::LeftWall, Label::CenterWall, Label::RightWall];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Label> {
        Some(match code {
            0 => Label::Void,
            1 => Label::Floor,
            2 => Label::Ceiling,
            3 => Label::LeftWall,
            4 => Label::CenterWall,
            5 => Label::RightWall,
            _ => return None,
        })
    }

    pub fn is_wall(self) -> bool {
        matches!(self, Label::LeftWall | Label::CenterWall | Label::RightWall)
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Void => "void",
            Label::Floor => "floor",
            Label::Ceiling => "ceiling",
            Label::LeftWall => "left_wall",
            Label::CenterWall => "center_wall",
            Label::RightWall => "right_wall",
        }
    }
}

/// One of the three wall-count families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    A,
    B,
    C,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::A, Group::B, Group::C];

    pub fn wall_count(self) -> usize {
        match self {
            Group::A => 3,
            Group::B => 2,
            Group::C => 1,
        }
    }

    pub fn prototype(self) -> RoomType {
        match self {
            Group::A => RoomType(0),
            Group::B => RoomType(5),
            Group::C => RoomType(6),
        }
    }

    pub fn prototype_keypoint_count(self) -> usize {
        match self {
            Group::A => 8,
            Group::B => 6,
            Group::C => 4,
        }
    }

    /// Prototype IDs `1..=prototype_keypoint_count`.
    pub fn prototype_ids(self) -> Vec<u8> {
        (1..=self.prototype_keypoint_count() as u8).collect()
    }

    pub fn tag(self) -> &'static str {
        match self {
            Group::A => "A",
            Group::B => "B",
            Group::C => "C",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Group> {
        match tag {
            "A" | "a" => Some(Group::A),
            "B" | "b" => Some(Group::B),
            "C" | "c" => Some(Group::C),
            _ => None,
        }
    }

    /// Keypoint IDs a layout of this group needs for the given presence flags.
    pub fn required_ids(self, ceiling_present: bool, floor_present: bool) -> Vec<u8> {
        let mut ids = Vec::with_capacity(self.prototype_keypoint_count());
        match self {
            Group::A => {
                ids.extend([1, 2, 3, 4]);
                if ceiling_present {
                    ids.extend([5, 6]);
                }
                if floor_present {
                    ids.extend([7, 8]);
                }
            }
            Group::B => {
                ids.extend([1, 2]);
                if ceiling_present {
                    ids.extend([3, 4]);
                }
                if floor_present {
                    ids.extend([5, 6]);
                }
            }
            Group::C => {
                if ceiling_present {
                    ids.extend([1, 2]);
                }
                if floor_present {
                    ids.extend([3, 4]);
                }
            }
        }
        ids
    }

    pub fn slot(self, id: u8) -> Option<KeypointSlot> {
        use KeypointRole::*;
        use Side::*;
        let (role, side) = match (self, id) {
            (Group::A, 1) => (UpperEdgeEnd, Left),
            (Group::A, 2) => (UpperEdgeEnd, Right),
            (Group::A, 3) => (LowerEdgeEnd, Left),
            (Group::A, 4) => (LowerEdgeEnd, Right),
            (Group::A, 5) => (CeilingExit, Left),
            (Group::A, 6) => (CeilingExit, Right),
            (Group::A, 7) => (FloorExit, Left),
            (Group::A, 8) => (FloorExit, Right),
            (Group::B, 1) => (UpperEdgeEnd, Left),
            (Group::B, 2) => (LowerEdgeEnd, Left),
            (Group::B, 3) => (CeilingExit, Left),
            (Group::B, 4) => (CeilingExit, Right),
            (Group::B, 5) => (FloorExit, Left),
            (Group::B, 6) => (FloorExit, Right),
            (Group::C, 1) => (CeilingExit, Left),
            (Group::C, 2) => (CeilingExit, Right),
            (Group::C, 3) => (FloorExit, Left),
            (Group::C, 4) => (FloorExit, Right),
            _ => return None,
        };
        Some(KeypointSlot { id, role, side })
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// What a prototype keypoint ID stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeypointRole {
    /// Ceiling end of a wall/wall edge; the top-border point of that edge
    /// when the ceiling is not visible.
    UpperEdgeEnd,
    /// Floor end of a wall/wall edge; the bottom-border point of that edge
    /// when the floor is not visible.
    LowerEdgeEnd,
    /// Point where a ceiling boundary leaves the image.
    CeilingExit,
    /// Point where a floor boundary leaves the image.
    FloorExit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeypointSlot {
    pub id: u8,
    pub role: KeypointRole,
    pub side: Side,
}

impl KeypointSlot {
    /// Exit slots only exist when their floor or ceiling is visible.
    pub fn is_optional(&self) -> bool {
        matches!(self.role, KeypointRole::CeilingExit | KeypointRole::FloorExit)
    }
}

/// LSUN room type, 0..=10.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct RoomType(u8);

impl TryFrom<u8> for RoomType {
    type Error = Error;

    fn try_from(id: u8) -> Result<Self> {
        RoomType::new(id)
    }
}

impl From<RoomType> for u8 {
    fn from(t: RoomType) -> u8 {
        t.0
    }
}

impl RoomType {
    pub const COUNT: u8 = 11;

    pub fn new(id: u8) -> Result<Self> {
        if id < Self::COUNT {
            Ok(RoomType(id))
        } else {
            Err(Error::RoomTypeOutOfRange(id))
        }
    }

    pub fn all() -> impl Iterator<Item = RoomType> {
        (0..Self::COUNT).map(RoomType)
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn group(self) -> Group {
        match self.0 {
            0 | 1 | 2 | 7 => Group::A,
            3 | 4 | 5 | 10 => Group::B,
            6 | 8 | 9 => Group::C,
            _ => unreachable!("RoomType is range-checked on construction"),
        }
    }

    pub fn ceiling_present(self) -> bool {
        matches!(self.0, 0 | 2 | 5 | 4 | 6 | 8)
    }

    pub fn floor_present(self) -> bool {
        matches!(self.0, 0 | 1 | 5 | 3 | 6 | 9)
    }

    pub fn keypoint_ids(self) -> Vec<u8> {
        self.group().required_ids(self.ceiling_present(), self.floor_present())
    }

    /// Inverse of the presence decomposition; group C without floor and
    /// ceiling is not an LSUN type.
    pub fn from_parts(group: Group, ceiling_present: bool, floor_present: bool) -> Option<RoomType> {
        let id = match (group, ceiling_present, floor_present) {
            (Group::A, true, true) => 0,
            (Group::A, false, true) => 1,
            (Group::A, true, false) => 2,
            (Group::A, false, false) => 7,
            (Group::B, true, true) => 5,
            (Group::B, false, true) => 3,
            (Group::B, true, false) => 4,
            (Group::B, false, false) => 10,
            (Group::C, true, true) => 6,
            (Group::C, true, false) => 8,
            (Group::C, false, true) => 9,
            (Group::C, false, false) => return None,
        };
        Some(RoomType(id))
    }
}

impl fmt::Display for RoomType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn group_of_type(t: u8) -> Result<Group> {
    Ok(RoomType::new(t)?.group())
}

pub fn keypoint_ids_of_type(t: u8) -> Result<Vec<u8>> {
    Ok(RoomType::new(t)?.keypoint_ids())
}

/// Labels used for a two-wall layout.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBWalls {
    /// Left region is `LeftWall`, right region is `CenterWall`.
    #[default]
    LeftCenter,
    /// Left region is `CenterWall`, right region is `RightWall`.
    CenterRight,
}

/// Wall labels of a group's regions, ordered left to right.
pub fn wall_labels_of_group(group: Group, b_walls: GroupBWalls) -> &'static [Label] {
    match (group, b_walls) {
        (Group::A, _) => &[Label::LeftWall, Label::CenterWall, Label::RightWall],
        (Group::B, GroupBWalls::LeftCenter) => &[Label::LeftWall, Label::CenterWall],
        (Group::B, GroupBWalls::CenterRight) => &[Label::CenterWall, Label::RightWall],
        (Group::C, _) => &[Label::CenterWall],
    }
}

/// Width and height in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Size {
    pub width: u32,
    pub height: u32,
}

impl Size {
    pub const fn new(width: u32, height: u32) -> Self {
        Size { width, height }
    }

    pub fn area(self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_empty(self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn diagonal(self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}
