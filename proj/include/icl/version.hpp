#pragma once

#define ICL_VERSION "0.1.0"
