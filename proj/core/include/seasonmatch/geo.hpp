#pragma once

namespace seasonmatch {

// Great-circle distance in meters between two WGS-84 points (haversine,
// spherical earth R = 6371 km).
double great_circle_m(double lat1, double lon1, double lat2, double lon2);

bool valid_lat(double lat);
bool valid_lon(double lon);

}  // namespace seasonmatch
