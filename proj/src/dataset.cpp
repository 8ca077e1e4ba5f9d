#include "aoitr/dataset.hpp"

#include "aoitr/error.hpp"

namespace aoitr::data {

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::library_positive: return "library-positive";
        case Provenance::expired_negative: return "expired-negative";
        case Provenance::low_iou_negative: return "low-iou-negative";
    }
    fail("bad provenance");
}

Provenance provenance_from_name(const std::string& s) {
    if (s == "library-positive") return Provenance::library_positive;
    if (s == "expired-negative") return Provenance::expired_negative;
    if (s == "low-iou-negative") return Provenance::low_iou_negative;
    fail("unknown provenance: " + s);
}

void GeoSample::validate() const {
    require(!id.empty(), "sample id must be nonempty");
    core.validate();
    require(core.kind == geo::PoiKind::core, "sample core POI must have core kind");
    require(truth.size() >= 3, "sample needs a ground-truth polygon");
    require(candidate.size() >= 3, "sample needs a candidate polygon");
    // Expired negatives deliberately break this: the compound moved away
    // while the library still lists the core at the old address.
    if (label.reliable)
        require(geo::point_in_polygon(core.location, truth) &&
                    !geo::point_on_boundary(core.location, truth),
                "core POI must lie strictly inside the ground truth");
    for (const POI& e : entrances) {
        e.validate();
        require(e.kind == geo::PoiKind::entrance, "entrance POI kind mismatch");
        require(geo::point_on_boundary(e.location, truth, 1e-7),
                "entrance must lie on the truth boundary");
    }
    raster.validate();
    roads.validate();
    if (!label.reliable)
        require(label.provenance != Provenance::library_positive,
                "negative labels need a negative provenance");
}

}  // namespace aoitr::data
