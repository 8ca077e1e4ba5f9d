#include "aoitr/geojson.hpp"

#include <filesystem>
#include <fstream>
#include <map>

#include "aoitr/error.hpp"
#include "aoitr/imagery.hpp"

namespace aoitr::data {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json coords(GeoPoint p) { return json::array({p.x, p.y}); }

GeoPoint point_from(const json& c) {
    require(c.is_array() && c.size() >= 2 && c[0].is_number() && c[1].is_number(),
            "geojson: bad coordinate pair");
    return {c[0].get<double>(), c[1].get<double>()};
}

const json& geometry_of(const json& f, const char* want) {
    require(f.is_object() && f.value("type", "") == "Feature", "geojson: not a Feature");
    const auto g = f.find("geometry");
    require(g != f.end() && g->is_object(), "geojson: feature without geometry");
    require(g->value("type", "") == want,
            std::string("geojson: expected ") + want + " geometry");
    return *g;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    require(out.good(), "cannot open for write: " + path.string());
    out << text;
    require(out.good(), "short write: " + path.string());
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    require(in.good(), "missing file: " + path.string());
    json j = json::parse(in, nullptr, false);
    require(!j.is_discarded(), "bad json: " + path.string());
    return j;
}

}  // namespace

const char* poi_kind_name(geo::PoiKind k) {
    switch (k) {
        case geo::PoiKind::core: return "core";
        case geo::PoiKind::entrance: return "entrance";
        case geo::PoiKind::generic: return "generic";
    }
    fail("bad poi kind");
}

geo::PoiKind poi_kind_from_name(const std::string& s) {
    if (s == "core") return geo::PoiKind::core;
    if (s == "entrance") return geo::PoiKind::entrance;
    if (s == "generic") return geo::PoiKind::generic;
    fail("unknown poi kind: " + s);
}

json polygon_feature(const Polygon& p, const json& properties) {
    require(p.size() >= 3, "polygon_feature: degenerate polygon");
    json ring = json::array();
    for (const GeoPoint& v : p.vertices()) ring.push_back(coords(v));
    ring.push_back(coords(p.vertices().front()));  // RFC 7946 closed ring
    return {{"type", "Feature"},
            {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring})}}},
            {"properties", properties}};
}

Polygon polygon_from_feature(const json& feature) {
    const json& g = geometry_of(feature, "Polygon");
    const auto& cs = g.at("coordinates");
    require(cs.is_array() && cs.size() == 1, "geojson: expected a single exterior ring");
    const auto& ring = cs[0];
    require(ring.is_array() && ring.size() >= 4, "geojson: ring too short");
    std::vector<GeoPoint> verts;
    for (size_t i = 0; i + 1 < ring.size(); ++i) verts.push_back(point_from(ring[i]));
    require(point_from(ring.back()) == verts.front(), "geojson: ring not closed");
    return Polygon(std::move(verts));
}

json poi_feature(const POI& p) {
    return {{"type", "Feature"},
            {"geometry", {{"type", "Point"}, {"coordinates", coords(p.location)}}},
            {"properties",
             {{"role", "poi"},
              {"id", p.id},
              {"category", p.category},
              {"kind", poi_kind_name(p.kind)},
              {"parent_id", p.parent_id}}}};
}

json feature_collection(std::vector<json> features) {
    return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

json sample_to_geojson(const GeoSample& s) {
    std::vector<json> fs;
    fs.push_back(polygon_feature(s.truth, {{"role", "truth"}}));
    fs.push_back(polygon_feature(s.candidate, {{"role", "candidate"}}));
    fs.push_back(poi_feature(s.core));
    for (const POI& e : s.entrances) fs.push_back(poi_feature(e));
    for (const POI& p : s.scene_pois) fs.push_back(poi_feature(p));
    for (const auto& seg : s.roads.segments) {
        fs.push_back(
            {{"type", "Feature"},
             {"geometry",
              {{"type", "LineString"},
               {"coordinates", json::array({coords(s.roads.nodes[size_t(seg.first)]),
                                            coords(s.roads.nodes[size_t(seg.second)])})}}},
             {"properties", {{"role", "road"}}}});
    }
    for (const LBSPoint& p : s.lbs)
        fs.push_back({{"type", "Feature"},
                      {"geometry", {{"type", "Point"}, {"coordinates", coords(p.location)}}},
                      {"properties", {{"role", "lbs"}, {"t", p.t}}}});
    for (const LogisticsRecord& l : s.logistics)
        fs.push_back({{"type", "Feature"},
                      {"geometry", {{"type", "Point"}, {"coordinates", coords(l.location)}}},
                      {"properties", {{"role", "logistics"}, {"poi_id", l.poi_id}}}});

    json j = feature_collection(std::move(fs));
    j["sample_id"] = s.id;
    j["label"] = {{"reliable", s.label.reliable},
                  {"provenance", provenance_name(s.label.provenance)}};
    return j;
}

GeoSample sample_from_geojson(const json& j) {
    require(j.is_object() && j.value("type", "") == "FeatureCollection",
            "geojson: not a FeatureCollection");
    GeoSample s;
    s.id = j.value("sample_id", "");
    const json label = j.value("label", json::object());
    s.label.reliable = label.value("reliable", true);
    s.label.provenance = provenance_from_name(label.value("provenance", "library-positive"));

    std::map<std::pair<double, double>, int> node_ix;
    bool have_truth = false, have_candidate = false, have_core = false;
    for (const json& f : j.at("features")) {
        const json props = f.value("properties", json::object());
        const std::string role = props.value("role", "");
        if (role == "truth") {
            s.truth = polygon_from_feature(f);
            have_truth = true;
        } else if (role == "candidate") {
            s.candidate = polygon_from_feature(f);
            have_candidate = true;
        } else if (role == "poi") {
            POI p{props.value("id", ""), point_from(geometry_of(f, "Point").at("coordinates")),
                  props.value("category", 0), poi_kind_from_name(props.value("kind", "generic")),
                  props.value("parent_id", "")};
            if (p.kind == geo::PoiKind::core) {
                require(!have_core, "geojson: more than one core poi");
                s.core = p;
                have_core = true;
            } else if (p.kind == geo::PoiKind::entrance) {
                s.entrances.push_back(p);
            } else {
                s.scene_pois.push_back(p);
            }
        } else if (role == "road") {
            const auto& cs = geometry_of(f, "LineString").at("coordinates");
            require(cs.is_array() && cs.size() == 2, "geojson: road segments are two-point");
            int ix[2];
            for (int e = 0; e < 2; ++e) {
                const GeoPoint p = point_from(cs[size_t(e)]);
                auto [it, fresh] = node_ix.try_emplace({p.x, p.y}, int(s.roads.nodes.size()));
                if (fresh) s.roads.nodes.push_back(p);
                ix[e] = it->second;
            }
            s.roads.segments.push_back({ix[0], ix[1]});
        } else if (role == "lbs") {
            require(props.contains("t") && props.at("t").is_number_integer(),
                    "geojson: lbs point without integer t");
            s.lbs.push_back({point_from(geometry_of(f, "Point").at("coordinates")),
                             props.at("t").get<std::int64_t>()});
        } else if (role == "logistics") {
            s.logistics.push_back({props.value("poi_id", ""),
                                   point_from(geometry_of(f, "Point").at("coordinates"))});
        } else {
            fail("geojson: unknown feature role '" + role + "'");
        }
    }
    require(have_truth && have_candidate && have_core,
            "geojson: sample missing truth/candidate/core");
    return s;
}

void save_sample(const std::string& dir, const GeoSample& s) {
    fs::create_directories(dir);
    write_text(fs::path(dir) / "scene.geojson", sample_to_geojson(s).dump());
    img::write_ppm((fs::path(dir) / "patch.ppm").string(), s.raster);
}

GeoSample load_sample(const std::string& dir) {
    GeoSample s = sample_from_geojson(read_json(fs::path(dir) / "scene.geojson"));
    s.raster = img::read_ppm((fs::path(dir) / "patch.ppm").string());
    s.validate();
    return s;
}

void save_dataset(const std::string& root, const std::vector<GeoSample>& samples,
                  double train_fraction) {
    require(train_fraction >= 0.0 && train_fraction <= 1.0, "bad train fraction");
    fs::create_directories(root);
    const size_t n_train = size_t(std::llround(double(samples.size()) * train_fraction));
    Manifest m;
    for (size_t i = 0; i < samples.size(); ++i) {
        save_sample((fs::path(root) / samples[i].id).string(), samples[i]);
        (i < n_train ? m.train : m.val).push_back(samples[i].id);
    }
    json j = {{"format", "aoi-dataset"}, {"train", m.train}, {"val", m.val}};
    write_text(fs::path(root) / "manifest.json", j.dump(2));
}

Manifest read_manifest(const std::string& root) {
    const json j = read_json(fs::path(root) / "manifest.json");
    require(j.value("format", "") == "aoi-dataset", "not a dataset root: " + root);
    Manifest m;
    for (const json& id : j.at("train")) m.train.push_back(id.get<std::string>());
    for (const json& id : j.at("val")) m.val.push_back(id.get<std::string>());
    return m;
}

std::vector<GeoSample> load_dataset(const std::string& root, const std::string& split) {
    const Manifest m = read_manifest(root);
    std::vector<std::string> ids;
    if (split == "train") ids = m.train;
    else if (split == "val") ids = m.val;
    else if (split == "all") {
        ids = m.train;
        ids.insert(ids.end(), m.val.begin(), m.val.end());
    } else {
        fail("unknown split '" + split + "' (want train, val, or all)");
    }
    std::vector<GeoSample> out;
    out.reserve(ids.size());
    for (const std::string& id : ids) out.push_back(load_sample((fs::path(root) / id).string()));
    return out;
}

}  // namespace aoitr::data
