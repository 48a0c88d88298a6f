#pragma once

// Umbrella header.

#include "mapalign/error.hpp"
#include "mapalign/item_set.hpp"
#include "mapalign/geometry.hpp"
#include "mapalign/random.hpp"
#include "mapalign/ingest.hpp"
#include "mapalign/mapper.hpp"
#include "mapalign/joint_graph.hpp"
#include "mapalign/layout_global.hpp"
#include "mapalign/align_local.hpp"
#include "mapalign/motif.hpp"
#include "mapalign/merge.hpp"
#include "mapalign/membrane.hpp"
#include "mapalign/bubbles.hpp"
#include "mapalign/serialize.hpp"
#include "mapalign/config.hpp"
#include "mapalign/pipeline.hpp"
#include "mapalign/report.hpp"
#include "mapalign/summarizer.hpp"
#include "mapalign/service.hpp"
#include "mapalign/http_server.hpp"
#include "mapalign/demo.hpp"
