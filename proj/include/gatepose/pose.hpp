#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace gatepose {

/// Propagation condition of a received UWB signal.
enum class Condition { Los = 0, Nlos = 1 };

/// Where the mobile device sits on the body. The first two are LOS
/// conditions, the last two NLOS.
enum class Pose { LosHand = 0, NlosHand = 1, Front = 2, Back = 3 };

constexpr std::array<Pose, 4> kAllPoses{Pose::LosHand, Pose::NlosHand, Pose::Front, Pose::Back};

constexpr Condition los_class(Pose p) {
    return (p == Pose::LosHand || p == Pose::Front) ? Condition::Los : Condition::Nlos;
}

constexpr bool is_hand(Pose p) { return p == Pose::LosHand || p == Pose::NlosHand; }

inline std::string to_string(Pose p) {
    switch (p) {
        case Pose::LosHand: return "LOS_HAND";
        case Pose::NlosHand: return "NLOS_HAND";
        case Pose::Front: return "FRONT";
        case Pose::Back: return "BACK";
    }
    return "?";
}

inline std::string to_string(Condition c) { return c == Condition::Los ? "LOS" : "NLOS"; }

inline Pose pose_from_string(const std::string& s) {
    for (Pose p : kAllPoses)
        if (to_string(p) == s) return p;
    throw std::invalid_argument("unknown pose: " + s);
}

}  // namespace gatepose
