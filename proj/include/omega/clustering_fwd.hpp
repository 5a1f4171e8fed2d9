#pragma once

namespace omega {

class MemoryBank;
struct ClusterModel;

}  // namespace omega
