//! The bundled Bari demo pack.

use super::{parse_content_pack, ContentPack, PackDocuments};

/// Waypoints (`lat,lon` per line) of a ride that passes the Politecnico
/// charging point, the Piazza Moro hub and the Teatro Petruzzelli, and no
/// other POI.
pub const BARI_DEMO_ROUTE: &str = include_str!("../../content/bari/route_3pois.txt");

pub fn bari_demo_documents() -> PackDocuments {
    PackDocuments {
        location_list: include_str!("../../content/bari/LocationList.xml").to_string(),
        geolocation: include_str!("../../content/bari/Geolocation.xml").to_string(),
        game_settings: include_str!("../../content/bari/GameSettings.xml").to_string(),
        messages: include_str!("../../content/bari/MessagesList.xml").to_string(),
    }
}

pub fn bari_demo_pack() -> ContentPack {
    parse_content_pack(&bari_demo_documents()).expect("bundled demo pack is valid")
}
