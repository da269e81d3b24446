//! Semantic class tables and the thing/stuff partition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Semantic class identifier (the R channel of a panoptic PNG).
pub type ClassId = u16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub id: ClassId,
    pub name: String,
    pub is_thing: bool,
}

impl ClassEntry {
    pub fn new(id: ClassId, name: impl Into<String>, is_thing: bool) -> Self {
        ClassEntry {
            id,
            name: name.into(),
            is_thing,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ClassTableDoc {
    classes: Vec<ClassEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ignore_id: Option<ClassId>,
}

/// Ordered set of classes with an optional ignore (void) class.
///
/// Pixels labelled with the ignore class are excluded from every metric.
/// The ignore class must itself be listed in the table and cannot be a thing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ClassTableDoc", into = "ClassTableDoc")]
pub struct ClassTable {
    entries: Vec<ClassEntry>,
    ignore_id: Option<ClassId>,
    index: Vec<Option<u16>>,
}

impl PartialEq for ClassTable {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries && self.ignore_id == other.ignore_id
    }
}

impl Eq for ClassTable {}

impl TryFrom<ClassTableDoc> for ClassTable {
    type Error = Error;

    fn try_from(doc: ClassTableDoc) -> Result<Self> {
        ClassTable::new(doc.classes, doc.ignore_id)
    }
}

impl From<ClassTable> for ClassTableDoc {
    fn from(table: ClassTable) -> Self {
        ClassTableDoc {
            classes: table.entries,
            ignore_id: table.ignore_id,
        }
    }
}

impl ClassTable {
    pub fn new(entries: Vec<ClassEntry>, ignore_id: Option<ClassId>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidClassTable("no classes".into()));
        }
        let max_id = entries.iter().map(|e| e.id).max().unwrap_or(0) as usize;
        let mut index = vec![None; max_id + 1];
        for (i, entry) in entries.iter().enumerate() {
            let slot = &mut index[entry.id as usize];
            if slot.is_some() {
                return Err(Error::InvalidClassTable(format!(
                    "duplicate class id {}",
                    entry.id
                )));
            }
            *slot = Some(i as u16);
        }
        let table = ClassTable {
            entries,
            ignore_id,
            index,
        };
        if let Some(ignore) = ignore_id {
            match table.entry(ignore) {
                None => {
                    return Err(Error::InvalidClassTable(format!(
                        "ignore id {ignore} is not listed"
                    )))
                }
                Some(e) if e.is_thing => {
                    return Err(Error::InvalidClassTable(format!(
                        "ignore id {ignore} is a thing class"
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(table)
    }

    /// KITTI-STEP / Cityscapes train ids: 19 classes, `person` and `car` are
    /// things, 255 is void.
    pub fn kitti_step() -> Self {
        const NAMES: [&str; 19] = [
            "road",
            "sidewalk",
            "building",
            "wall",
            "fence",
            "pole",
            "traffic light",
            "traffic sign",
            "vegetation",
            "terrain",
            "sky",
            "person",
            "rider",
            "car",
            "truck",
            "bus",
            "train",
            "motorcycle",
            "bicycle",
        ];
        let mut entries: Vec<ClassEntry> = NAMES
            .iter()
            .enumerate()
            .map(|(i, name)| ClassEntry::new(i as ClassId, *name, i == 11 || i == 13))
            .collect();
        entries.push(ClassEntry::new(255, "void", false));
        ClassTable::new(entries, Some(255)).expect("static table")
    }

    /// MOTChallenge-STEP style table: 7 classes with `person` as the only
    /// thing, 255 is void.
    pub fn motchallenge_step() -> Self {
        const NAMES: [&str; 7] = [
            "sidewalk",
            "building",
            "vegetation",
            "sky",
            "person",
            "road",
            "other",
        ];
        let mut entries: Vec<ClassEntry> = NAMES
            .iter()
            .enumerate()
            .map(|(i, name)| ClassEntry::new(i as ClassId, *name, i == 4))
            .collect();
        entries.push(ClassEntry::new(255, "void", false));
        ClassTable::new(entries, Some(255)).expect("static table")
    }

    pub fn entries(&self) -> &[ClassEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ignore_id(&self) -> Option<ClassId> {
        self.ignore_id
    }

    /// Position of `id` in [`entries`](Self::entries).
    #[inline]
    pub fn index_of(&self, id: ClassId) -> Option<usize> {
        self.index
            .get(id as usize)
            .copied()
            .flatten()
            .map(|i| i as usize)
    }

    pub fn entry(&self, id: ClassId) -> Option<&ClassEntry> {
        self.index_of(id).map(|i| &self.entries[i])
    }

    #[inline]
    pub fn contains(&self, id: ClassId) -> bool {
        self.index_of(id).is_some()
    }

    #[inline]
    pub fn is_thing(&self, id: ClassId) -> bool {
        self.entry(id).is_some_and(|e| e.is_thing)
    }

    #[inline]
    pub fn is_ignore(&self, id: ClassId) -> bool {
        self.ignore_id == Some(id)
    }

    pub fn thing_ids(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.entries.iter().filter(|e| e.is_thing).map(|e| e.id)
    }

    /// Stuff classes, excluding the ignore class.
    pub fn stuff_ids(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.entries
            .iter()
            .filter(move |e| !e.is_thing && Some(e.id) != self.ignore_id)
            .map(|e| e.id)
    }

    pub fn has_things(&self) -> bool {
        self.entries.iter().any(|e| e.is_thing)
    }
}
