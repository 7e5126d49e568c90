//! Tags used by the codec, the pixel module and the SR builder.

use super::Tag;

pub const FILE_META_GROUP_LENGTH: Tag = Tag::new(0x0002, 0x0000);
pub const FILE_META_VERSION: Tag = Tag::new(0x0002, 0x0001);
pub const MEDIA_STORAGE_SOP_CLASS_UID: Tag = Tag::new(0x0002, 0x0002);
pub const MEDIA_STORAGE_SOP_INSTANCE_UID: Tag = Tag::new(0x0002, 0x0003);
pub const TRANSFER_SYNTAX_UID: Tag = Tag::new(0x0002, 0x0010);
pub const IMPLEMENTATION_CLASS_UID: Tag = Tag::new(0x0002, 0x0012);

pub const INSTANCE_CREATION_DATE: Tag = Tag::new(0x0008, 0x0012);
pub const INSTANCE_CREATION_TIME: Tag = Tag::new(0x0008, 0x0013);
pub const SOP_CLASS_UID: Tag = Tag::new(0x0008, 0x0016);
pub const SOP_INSTANCE_UID: Tag = Tag::new(0x0008, 0x0018);
pub const CONTENT_DATE: Tag = Tag::new(0x0008, 0x0023);
pub const CONTENT_TIME: Tag = Tag::new(0x0008, 0x0033);
pub const MODALITY: Tag = Tag::new(0x0008, 0x0060);
pub const REFERENCED_IMAGE_SEQUENCE: Tag = Tag::new(0x0008, 0x1140);
pub const REFERENCED_SOP_CLASS_UID: Tag = Tag::new(0x0008, 0x1150);
pub const REFERENCED_SOP_INSTANCE_UID: Tag = Tag::new(0x0008, 0x1155);
pub const SOFTWARE_VERSIONS: Tag = Tag::new(0x0018, 0x1020);
pub const VIEW_POSITION: Tag = Tag::new(0x0018, 0x5101);
pub const PATIENT_ID: Tag = Tag::new(0x0010, 0x0020);
pub const STUDY_INSTANCE_UID: Tag = Tag::new(0x0020, 0x000D);
pub const SERIES_INSTANCE_UID: Tag = Tag::new(0x0020, 0x000E);
pub const INSTANCE_NUMBER: Tag = Tag::new(0x0020, 0x0013);

pub const SAMPLES_PER_PIXEL: Tag = Tag::new(0x0028, 0x0002);
pub const PHOTOMETRIC_INTERPRETATION: Tag = Tag::new(0x0028, 0x0004);
pub const ROWS: Tag = Tag::new(0x0028, 0x0010);
pub const COLUMNS: Tag = Tag::new(0x0028, 0x0011);
pub const BITS_ALLOCATED: Tag = Tag::new(0x0028, 0x0100);
pub const BITS_STORED: Tag = Tag::new(0x0028, 0x0101);
pub const HIGH_BIT: Tag = Tag::new(0x0028, 0x0102);
pub const PIXEL_REPRESENTATION: Tag = Tag::new(0x0028, 0x0103);

pub const RELATIONSHIP_TYPE: Tag = Tag::new(0x0040, 0xA010);
pub const VALUE_TYPE: Tag = Tag::new(0x0040, 0xA040);
pub const CONTINUITY_OF_CONTENT: Tag = Tag::new(0x0040, 0xA050);
pub const TEXT_VALUE: Tag = Tag::new(0x0040, 0xA160);
pub const COMPLETION_FLAG: Tag = Tag::new(0x0040, 0xA491);
pub const VERIFICATION_FLAG: Tag = Tag::new(0x0040, 0xA493);
pub const CONTENT_SEQUENCE: Tag = Tag::new(0x0040, 0xA730);

pub const PIXEL_DATA: Tag = Tag::new(0x7FE0, 0x0010);

pub const ITEM: Tag = Tag::new(0xFFFE, 0xE000);
