//! Reads road centerlines and parking rows from GeoJSON, then places cars in
//! the lanes and in parking spots.

use std::collections::BTreeMap;

use scenesmith::fixture;
use scenesmith::placement::{
    parse_road_geojson, place_cars_on_roads, place_parking, AssetCatalog, AssetEntry, FlatGround, ParkingParams, RoadKind, RoadParams,
};
use scenesmith::scene::format_instance_list;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let origin = fixture::origin();
    let features = parse_road_geojson(&fixture::roads_geojson(), &origin, &FlatGround(0.0))?;
    let net = &features.network;
    println!(
        "{} nodes, {} edges, {:.1} m of road, {:.1} m of path, {} parking rows",
        net.nodes.len(),
        net.edges.len(),
        net.total_length(RoadKind::Road),
        net.total_length(RoadKind::Path),
        features.parking.len()
    );

    let cars = AssetCatalog::new(BTreeMap::from([
        ("sedan".to_string(), AssetEntry { mesh: "cars/sedan.obj".into(), variants: 4, footprint_radius: 2.4 }),
        ("pickup".to_string(), AssetEntry { mesh: "cars/pickup.obj".into(), variants: 2, footprint_radius: 2.9 }),
    ]))?;
    let road = place_cars_on_roads(net, &cars, &RoadParams { occupancy: 0.4, ..RoadParams::default() }, 21)?;
    let parked = place_parking(&features.parking, &cars, &ParkingParams::default(), 21)?;
    let spots: usize = features.parking.iter().map(|r| r.spot_count()).sum();
    println!("{} cars in lanes, {} of {spots} parking spots taken\n", road.len(), parked.len());
    print!("{}", format_instance_list(&road)?);
    Ok(())
}
