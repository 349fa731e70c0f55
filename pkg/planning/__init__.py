# View planning app package
