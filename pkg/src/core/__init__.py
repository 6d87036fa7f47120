# Core domain types, environments and errors