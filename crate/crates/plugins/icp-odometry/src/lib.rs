slambench_core::export_algorithm!(slambench_reference::IcpOdometry);
